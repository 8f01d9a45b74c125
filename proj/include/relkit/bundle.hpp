#pragma once

// Versioned JSON document holding everything needed to assess new rows:
// the density model, the local-fit model, the feature schema and fit-time
// provenance. It never holds training or synthetic rows.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relkit/data.hpp"
#include "relkit/density.hpp"
#include "relkit/localfit.hpp"

namespace relkit::bundle {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kFormatName = "relkit-bundle";
inline constexpr const char* kToolkitVersion = "0.1.0";

struct FeatureSchema {
  std::vector<std::string> input_columns;   // raw feature columns, in order
  std::vector<std::string> feature_names;   // after one-hot expansion
  std::vector<data::CategoricalEncoding> encodings;
  std::optional<std::string> label;
  std::optional<std::string> prediction;
  std::optional<std::string> score;

  bool operator==(const FeatureSchema&) const = default;
};

struct Provenance {
  std::string toolkit_version = kToolkitVersion;
  std::uint64_t density_seed = 0;
  int density_epochs = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t proxy_seed = 0;
  std::vector<double> noise_sigmas;
  int copies_per_sigma = 0;
  std::size_t synthetic_rows = 0;
  double synthetic_reliable_fraction = 0.0;
  double proxy_train_accuracy = 0.0;
  std::size_t train_rows = 0;  // count only

  bool operator==(const Provenance&) const = default;
};

struct ReliabilityBundle {
  int format_version = kFormatVersion;
  FeatureSchema schema;
  density::DensityModel density;
  localfit::LocalFitModel localfit;
  Provenance provenance;

  // Schema width must match both models.
  void validate() const;
  bool operator==(const ReliabilityBundle&) const = default;
};

// Pretty-printed JSON with sorted keys; identical bundles give identical
// bytes and every double round-trips exactly.
std::string serialize(const ReliabilityBundle& b);
ReliabilityBundle deserialize(const std::string& text);

void save_bundle(const std::filesystem::path& path, const ReliabilityBundle& b);
ReliabilityBundle load_bundle(const std::filesystem::path& path);

}  // namespace relkit::bundle
