#include <iostream>

#include "CLI11.hpp"
#include "relkit/cli_commands.hpp"
#include "relkit/errors.hpp"

namespace cli = relkit::cli;

int main(int argc, char** argv) {
  CLI::App app{"relkit: pointwise reliability checks for binary classifiers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string fit_out;
  std::optional<std::uint64_t> fit_seed;
  auto* fit = app.add_subcommand("fit", "Fit the density and local-fit models and write a bundle");
  fit->add_option("-c,--config", config_path, "JSON run configuration")->required();
  fit->add_option("-o,--out", fit_out, "Bundle path (overrides output.bundle)");
  fit->add_option("--seed", fit_seed, "Seed for all fitting randomness");

  cli::AssessOptions assess_opts;
  auto* assess = app.add_subcommand("assess", "Assess rows of a CSV against a bundle");
  assess->add_option("-b,--bundle", assess_opts.bundle, "Bundle file")->required();
  assess->add_option("-i,--input", assess_opts.input, "Input CSV")->required();
  assess->add_option("-o,--out", assess_opts.output, "Per-row report CSV")->required();
  assess->add_option("--passthrough", assess_opts.passthrough,
                     "Extra input columns copied to the report");

  cli::EvaluateOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics on the reliable and unreliable subsets");
  evaluate->add_option("-i,--input", eval_opts.input, "Assessment CSV")->required();
  evaluate->add_option("--label", eval_opts.label, "True label column")->capture_default_str();
  evaluate->add_option("--prediction", eval_opts.prediction, "Prediction column")->capture_default_str();
  evaluate->add_option("--score", eval_opts.score, "Positive-class score column")->capture_default_str();
  evaluate->add_option("--reliable", eval_opts.reliable, "Reliability flag column")->capture_default_str();

  cli::SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Run the simulated two-class experiment");
  simulate->add_option("-o,--out-dir", sim_opts.out_dir, "Output directory")->capture_default_str();
  simulate->add_option("--seed", sim_opts.seed, "Data generator seed");
  simulate->add_option("--ood-count", sim_opts.ood_count, "Number of OOD test rows");
  simulate->add_option("--n-train", sim_opts.n_train, "Training rows");
  simulate->add_option("--n-validation", sim_opts.n_validation, "Validation rows");
  simulate->add_option("--n-test", sim_opts.n_test, "In-distribution test rows");
  simulate->add_flag("--check", sim_opts.check,
                     "Exit 4 unless OOD detection >= 0.70 and the balanced-accuracy delta > 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(cli::ExitCode::ConfigError);
  }

  try {
    if (*fit) {
      auto cfg = cli::load_fit_config(config_path);
      if (fit_seed) cli::apply_seed(cfg, *fit_seed);
      if (!fit_out.empty()) cfg.bundle_out = fit_out;
      cli::cmd_fit(cfg, std::cout);
    } else if (*assess) {
      cli::cmd_assess(assess_opts, std::cout);
    } else if (*evaluate) {
      cli::cmd_evaluate(eval_opts, std::cout);
    } else if (*simulate) {
      const auto result = cli::cmd_simulate(sim_opts, std::cout);
      if (sim_opts.check && !result.check_passed) {
        return static_cast<int>(cli::ExitCode::CheckFailed);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(cli::exit_code_for(e));
  }
  return 0;
}
