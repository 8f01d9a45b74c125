#include "relkit/experiment.hpp"

namespace relkit::experiment {

namespace {

void predict_all(const forest::RandomForest& rf, const Matrix& x, std::vector<int>& labels,
                 std::vector<double>& scores) {
  labels.resize(x.rows());
  scores.resize(x.rows());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    const auto p = forest::rf_predict(rf, x.row(i));
    labels[i] = p.label;
    scores[i] = p.probability;
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.data = sim::generate_sim(cfg.sim);
  const auto& train = rep.data.train;
  const auto& val = rep.data.validation;
  const auto& test = rep.data.test;

  const auto rf = forest::rf_fit(train.values, *train.labels, cfg.forest);
  predict_all(rf, train.values, rep.train_predictions, rep.train_scores);
  predict_all(rf, val.values, rep.validation_predictions, rep.validation_scores);
  rep.train_accuracy = metrics::accuracy_score(*train.labels, rep.train_predictions);
  rep.validation_accuracy = metrics::accuracy_score(*val.labels, rep.validation_predictions);

  auto density_fit = density::fit_density(train.values, cfg.density_train, cfg.density_policy,
                                          &val.values);
  rep.density = std::move(density_fit.model);
  rep.warnings = std::move(density_fit.warnings);

  rep.localfit_stats =
      localfit::fit_localfit(train.values, *train.labels, rep.train_predictions, cfg.localfit);
  rep.localfit = rep.localfit_stats.model;
  rep.warnings.insert(rep.warnings.end(), rep.localfit_stats.warnings.begin(),
                      rep.localfit_stats.warnings.end());

  std::vector<int> test_pred;
  std::vector<double> test_score;
  predict_all(rf, test.values, test_pred, test_score);
  const auto verdicts = assess_rows(rep.density, rep.localfit, test.values);

  std::vector<int> flags(verdicts.size());
  std::size_t ood_combined = 0;
  rep.points.reserve(test.rows());
  for (std::size_t i = 0; i < test.rows(); ++i) {
    PointRecord p;
    p.x1 = test.values(i, 0);
    p.x2 = test.values(i, 1);
    p.label = (*test.labels)[i];
    p.prediction = test_pred[i];
    p.score = test_score[i];
    p.ood = rep.data.test_ood[i] == 1;
    p.verdict = verdicts[i];
    flags[i] = verdicts[i].reliable ? 1 : 0;
    if (p.ood) {
      ++rep.n_ood;
      rep.ood_density_unreliable += !p.verdict.density.reliable;
      ood_combined += !p.verdict.reliable;
    }
    rep.points.push_back(p);
  }
  if (rep.n_ood > 0) {
    const auto n = static_cast<double>(rep.n_ood);
    rep.ood_density_detection =
        metrics::MetricValue::of(static_cast<double>(rep.ood_density_unreliable) / n);
    rep.ood_combined_detection = metrics::MetricValue::of(static_cast<double>(ood_combined) / n);
  }
  rep.evaluation = evaluate_subsets(*test.labels, test_pred, test_score, flags);
  return rep;
}

}  // namespace relkit::experiment
