#pragma once

// End-to-end run on simulated data: fit the reference forest, record its
// training predictions, fit both reliability models, assess the test set
// and evaluate the forest on the reliable and unreliable subsets.

#include <cstddef>
#include <vector>

#include "relkit/density.hpp"
#include "relkit/forest.hpp"
#include "relkit/localfit.hpp"
#include "relkit/metrics.hpp"
#include "relkit/reliability.hpp"
#include "relkit/sim.hpp"

namespace relkit::experiment {

struct ExperimentConfig {
  sim::SimSpec sim;
  forest::ForestConfig forest{.n_trees = 100,
                              .tree = {.max_depth = 12, .min_samples_leaf = 10},
                              .bootstrap = true,
                              .seed = 11};
  density::ThresholdPolicy density_policy = density::ThresholdPolicy::percentile_of_validation(98.0);
  nn::TrainConfig density_train = density::default_train_config(density_policy, 13);
  localfit::LocalFitConfig localfit = [] {
    localfit::LocalFitConfig c;
    c.k = 5;
    c.accuracy_threshold = 0.85;
    c.noise.seed = 17;
    c.proxy_train.seed = 19;
    return c;
  }();
};

struct PointRecord {
  double x1 = 0.0;
  double x2 = 0.0;
  int label = 0;
  int prediction = 0;
  double score = 0.0;
  bool ood = false;
  RowVerdict verdict;
};

struct ExperimentReport {
  sim::SimData data;
  std::vector<int> train_predictions;
  std::vector<double> train_scores;
  std::vector<int> validation_predictions;
  std::vector<double> validation_scores;
  std::vector<PointRecord> points;  // one per test row

  density::DensityModel density;
  localfit::LocalFitModel localfit;
  localfit::LocalFitFit localfit_stats;  // model field is a copy of `localfit`
  std::vector<std::string> warnings;

  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  SubsetEvaluation evaluation;
  // Fraction of OOD rows the density check flags unreliable, and the same
  // for the combined verdict. Undefined when there are no OOD rows.
  metrics::MetricValue ood_density_detection;
  metrics::MetricValue ood_combined_detection;
  std::size_t n_ood = 0;
  std::size_t ood_density_unreliable = 0;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace relkit::experiment
