#pragma once

// The four command-line verbs as library functions, so tests can drive
// them without spawning a process. Each writes its human summary to `out`.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relkit/bundle.hpp"
#include "relkit/data.hpp"
#include "relkit/density.hpp"
#include "relkit/experiment.hpp"
#include "relkit/localfit.hpp"
#include "relkit/reliability.hpp"

namespace relkit::cli {

enum class ExitCode : int {
  Ok = 0,
  Error = 1,
  ConfigError = 2,
  SchemaMismatch = 3,
  CheckFailed = 4,
};

ExitCode exit_code_for(const std::exception& e);

// ---- fit -------------------------------------------------------------

struct FitConfig {
  std::filesystem::path train;
  std::optional<std::filesystem::path> validation;
  std::filesystem::path bundle_out = "bundle.json";
  data::Schema schema;  // label and prediction are required
  density::ThresholdPolicy policy = density::ThresholdPolicy::percentile_of_validation(98.0);
  nn::TrainConfig density_train = density::default_train_config(policy);
  localfit::LocalFitConfig localfit;
};

// Parses the JSON config. Relative paths resolve against `base_dir`.
// Unknown keys and wrongly typed values raise ConfigError naming the field.
FitConfig parse_fit_config(const std::string& text, const std::filesystem::path& base_dir);
FitConfig load_fit_config(const std::filesystem::path& path);

// Sets the density, noise and proxy seeds from one value.
void apply_seed(FitConfig& cfg, std::uint64_t seed);

struct FitSummary {
  bundle::ReliabilityBundle bundle;
  std::size_t train_rows = 0;
  std::size_t dropped_rows = 0;
  std::vector<std::string> warnings;
};

FitSummary cmd_fit(const FitConfig& cfg, std::ostream& out);

// ---- assess ----------------------------------------------------------

struct AssessOptions {
  std::filesystem::path bundle;
  std::filesystem::path input;
  std::filesystem::path output;
  // Extra input columns copied to the output unchanged.
  std::vector<std::string> passthrough;
};

struct AssessSummary {
  std::size_t rows = 0;
  std::size_t dropped_rows = 0;
  std::size_t density_unreliable = 0;
  std::size_t localfit_unreliable = 0;
  std::size_t reliable = 0;
  std::vector<RowVerdict> verdicts;
};

// Throws SchemaError with an expected/found diff when the input's feature
// columns differ from the bundle's in name or order.
void check_input_columns(const bundle::FeatureSchema& schema,
                         const std::vector<std::string>& header,
                         const std::vector<std::string>& passthrough);

AssessSummary cmd_assess(const AssessOptions& opts, std::ostream& out);

// ---- evaluate --------------------------------------------------------

struct EvaluateOptions {
  std::filesystem::path input;
  std::string label = "label";
  std::string prediction = "prediction";
  std::string score = "score";
  std::string reliable = "reliable";
};

SubsetEvaluation cmd_evaluate(const EvaluateOptions& opts, std::ostream& out);

// Plain-text table: one row per metric, columns whole / reliable /
// unreliable / delta; undefined cells read "undefined".
void print_evaluation(const SubsetEvaluation& ev, std::ostream& out);

// ---- simulate --------------------------------------------------------

struct SimulateOptions {
  std::filesystem::path out_dir = "sim_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ood_count;
  std::optional<std::size_t> n_train;
  std::optional<std::size_t> n_validation;
  std::optional<std::size_t> n_test;
  bool check = false;
};

inline constexpr double kMinOodDetection = 0.70;

struct SimulateResult {
  experiment::ExperimentReport report;
  bool check_passed = false;
  std::vector<std::string> check_failures;
};

// Acceptance gate for --check: OOD density detection >= 0.70 and a
// positive balanced-accuracy delta. Undefined values fail.
std::vector<std::string> check_failures(const experiment::ExperimentReport& report);

SimulateResult cmd_simulate(const SimulateOptions& opts, std::ostream& out);

// Bundle for an experiment run over the simulated x1/x2 columns.
bundle::ReliabilityBundle experiment_bundle(const experiment::ExperimentConfig& cfg,
                                            const experiment::ExperimentReport& report);

}  // namespace relkit::cli
