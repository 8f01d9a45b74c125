// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "relkit/bundle.hpp"
#include "relkit/cli_commands.hpp"
#include "relkit/density.hpp"
#include "relkit/experiment.hpp"
#include "relkit/localfit.hpp"
#include "relkit/metrics.hpp"
#include "relkit/neighbors.hpp"
#include "relkit/nnkit.hpp"
#include "relkit/reliability.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace relkit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> check;
};

// Shared by the simulation and determinism checks; run once.
const experiment::ExperimentReport& default_report(double* seconds = nullptr) {
  static double elapsed = 0.0;
  static const experiment::ExperimentReport report = [] {
    const auto start = std::chrono::steady_clock::now();
    auto r = experiment::run_experiment(experiment::ExperimentConfig{});
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  if (seconds) *seconds = elapsed;
  return report;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

Outcome gradient_check() {
  oracle::Gen gen(1001);
  double worst = 0.0;
  int networks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    for (auto loss : {nn::Loss::MeanSquaredError, nn::Loss::BinaryCrossEntropy}) {
      const auto net = gen.network(loss);
      const auto x = gen.vec(net.input_dim());
      std::vector<double> target(net.output_dim());
      for (auto& t : target) t = loss == nn::Loss::BinaryCrossEntropy ? gen.bit() : gen.uniform(-1, 1);
      const auto analytic = nn::backward(net, x, target, loss);
      const auto numeric = oracle::numeric_gradients(net, x, target, loss, 1e-5);
      worst = std::max(worst, oracle::max_gradient_error(analytic, numeric));
      ++networks;
    }
  }
  std::ostringstream d;
  d << networks << " networks, worst relative error " << worst;
  return {worst < 1e-4, d.str()};
}

Outcome mse_oracle() {
  oracle::Gen gen(1002);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = gen.index(1, 64);
    const auto y = gen.vec(n, -10, 10);
    const auto y_hat = gen.vec(n, -10, 10);
    worst = std::max(worst, std::abs(nn::mse_loss(y, y_hat) - oracle::naive_mse(y, y_hat)));
  }
  std::ostringstream d;
  d << "1000 pairs, max abs difference " << worst;
  return {worst <= 1e-15, d.str()};
}

Outcome knn_exactness() {
  oracle::Gen gen(1003);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = gen.index(1, 60);
    const std::size_t d = gen.index(1, 4);
    // Half the cases use an integer grid so distance ties are common.
    const bool ties = trial % 2 == 0;
    const Matrix pts = ties ? gen.grid_matrix(n, d, 2) : gen.matrix(n, d);
    const Matrix q = ties ? gen.grid_matrix(1, d, 3) : gen.matrix(1, d);
    const std::size_t k = gen.index(1, n);
    const neighbors::NeighborIndex index(pts);
    const auto got = index.knn(q.row(0), k);
    const auto want = oracle::sorted_neighbors(pts, q.row(0));
    for (std::size_t i = 0; i < k; ++i) {
      if (got[i].id != want[i].second || got[i].distance != want[i].first) {
        ++mismatches;
        break;
      }
    }
  }
  return {mismatches == 0, "1000 cases, " + std::to_string(mismatches) + " mismatches"};
}

Outcome labeling_oracle() {
  oracle::Gen gen(1004);
  int points = 0;
  int mismatches = 0;
  while (points < 500) {
    const std::size_t n = gen.index(5, 80);
    const Matrix train = gen.grid_matrix(n, 2, 3);
    const auto y_true = gen.bits(n);
    const auto y_pred = gen.bits(n, 0.7);
    const std::size_t k = gen.index(1, std::min<std::size_t>(n, 9));
    const double t = gen.uniform(0, 1);
    const neighbors::NeighborIndex index(train);
    const Matrix batch = gen.grid_matrix(10, 2, 4);
    const auto got = localfit::label_synthetic(batch, index, y_true, y_pred, k, t);
    for (std::size_t p = 0; p < batch.rows(); ++p, ++points) {
      mismatches += got.labels[p] != oracle::brute_force_label(train, y_true, y_pred, batch.row(p), k, t);
    }
  }
  return {mismatches == 0,
          std::to_string(points) + " points, " + std::to_string(mismatches) + " mismatches"};
}

Outcome auc_oracle() {
  oracle::Gen gen(1005);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = gen.index(2, 80);
    auto y = gen.bits(n);
    y[0] = 1;
    y[1] = 0;
    std::vector<double> s(n);
    if (trial % 2 == 0) {
      const int levels = static_cast<int>(gen.index(1, 6));
      for (auto& v : s) v = static_cast<double>(gen.index(0, levels)) / levels;
    } else {
      s = gen.vec(n, 0, 1);
    }
    const auto auc = metrics::roc_auc(y, s);
    if (!auc.defined) return {false, "AUC undefined on a two-class set"};
    worst = std::max(worst, std::abs(auc.value - oracle::mann_whitney_auc(y, s)));
  }
  std::ostringstream d;
  d << "200 sets, max difference " << worst;
  return {worst <= 1e-12, d.str()};
}

Outcome table_fixture() {
  const std::vector<int> y_true{1, 1, 0, 0, 1, 0, 1, 0};
  const std::vector<int> y_pred{1, 0, 0, 0, 0, 1, 1, 0};
  const std::vector<double> score{0.9, 0.4, 0.3, 0.1, 0.3, 0.6, 0.6, 0.2};
  const std::vector<int> reliable{1, 1, 1, 1, 0, 0, 0, 0};
  const auto ev = evaluate_subsets(y_true, y_pred, score, reliable);
  struct Expect {
    const char* what;
    metrics::MetricValue got;
    double want;
  };
  const std::vector<Expect> expected{
      {"reliable BA", ev.reliable.balanced_accuracy, 0.75},
      {"reliable precision", ev.reliable.precision, 1.0},
      {"reliable recall", ev.reliable.recall, 0.5},
      {"reliable AUC", ev.reliable.auc, 1.0},
      {"reliable F1", ev.reliable.f1, 2.0 / 3.0},
      {"reliable MCC", ev.reliable.mcc, 2.0 / std::sqrt(12.0)},
      {"reliable PRC", ev.reliable.prc, 1.0},
      {"reliable Brier", ev.reliable.brier, 0.47 / 4.0},
      {"unreliable BA", ev.unreliable.balanced_accuracy, 0.5},
      {"unreliable precision", ev.unreliable.precision, 0.5},
      {"unreliable recall", ev.unreliable.recall, 0.5},
      {"unreliable AUC", ev.unreliable.auc, 0.625},
      {"unreliable F1", ev.unreliable.f1, 0.5},
      {"unreliable MCC", ev.unreliable.mcc, 0.0},
      {"unreliable PRC", ev.unreliable.prc, 0.25 + 1.0 / 3.0},
      {"unreliable Brier", ev.unreliable.brier, 1.05 / 4.0},
      {"whole BA", ev.whole.balanced_accuracy, 0.625},
      {"delta BA", ev.delta.balanced_accuracy, 0.25},
      {"delta AUC", ev.delta.auc, 0.375},
      {"delta Brier", ev.delta.brier, 0.47 / 4.0 - 1.05 / 4.0},
  };
  for (const auto& e : expected) {
    if (!e.got.defined || std::abs(e.got.value - e.want) > 1e-15) {
      return {false, std::string(e.what) + " = " + fmt(e.got.value) + ", expected " + fmt(e.want)};
    }
  }
  if (!(ev.delta == metrics::delta_report(ev.reliable, ev.unreliable))) {
    return {false, "delta_report disagrees with the subset delta"};
  }
  metrics::MetricsReport rel;
  metrics::MetricsReport unrel;
  rel.balanced_accuracy = metrics::MetricValue::of(0.856);
  unrel.balanced_accuracy = metrics::MetricValue::of(0.682);
  rel.brier = metrics::MetricValue::of(0.065);
  unrel.brier = metrics::MetricValue::of(0.319);
  const auto d = metrics::delta_report(rel, unrel);
  const bool direction = std::abs(d.balanced_accuracy.value - 0.174) < 1e-12 &&
                         std::abs(d.brier.value + 0.254) < 1e-12;
  return {direction, std::to_string(expected.size()) +
                         " hand values exact; deltas are reliable minus unreliable"};
}

Outcome simulated_experiment() {
  double seconds = 0.0;
  const auto& r = default_report(&seconds);
  const auto& ev = r.evaluation;
  const bool a = r.ood_density_detection.defined && r.ood_density_detection.value >= 0.70;
  const bool b = ev.delta.balanced_accuracy.defined && ev.delta.balanced_accuracy.value > 0.05;
  const bool c = ev.delta.brier.defined && ev.delta.brier.value < 0.0;
  const bool d = ev.reliable.balanced_accuracy.defined && ev.whole.balanced_accuracy.defined &&
                 ev.unreliable.balanced_accuracy.defined &&
                 ev.reliable.balanced_accuracy.value >= ev.whole.balanced_accuracy.value &&
                 ev.whole.balanced_accuracy.value >= ev.unreliable.balanced_accuracy.value;
  const bool fast = seconds < 120.0;
  std::ostringstream out;
  out << "OOD detection " << fmt(r.ood_density_detection.value) << " of " << r.n_ood
      << "; BA reliable/whole/unreliable " << fmt(ev.reliable.balanced_accuracy.value) << "/"
      << fmt(ev.whole.balanced_accuracy.value) << "/" << fmt(ev.unreliable.balanced_accuracy.value)
      << "; BA delta " << fmt(ev.delta.balanced_accuracy.value) << "; Brier delta "
      << fmt(ev.delta.brier.value) << "; " << fmt(seconds) << " s";
  return {a && b && c && d && fast, out.str()};
}

Outcome max_of_training_identity() {
  const auto& train = default_report().data.train.values;
  const auto policy = density::ThresholdPolicy::max_of_training();
  const auto fit = density::fit_density(train, density::default_train_config(policy, 13), policy);
  std::size_t reliable = 0;
  for (const auto& v : density::assess_density_batch(fit.model, train)) reliable += v.reliable;
  return {reliable == train.rows(),
          std::to_string(reliable) + " of " + std::to_string(train.rows()) + " training rows reliable"};
}

Outcome monotonicity() {
  oracle::Gen gen(1009);
  int density_violations = 0;
  for (int config = 0; config < 100; ++config) {
    const std::size_t d = gen.index(1, 6);
    const auto arch = density::default_ae_architecture(d);
    density::DensityModel m;
    m.autoencoder = nn::NetworkModel::glorot(arch.dims, arch.activations, gen.rng());
    m.scaler = data::MinMaxScaler(std::vector<double>(d, -1.0), std::vector<double>(d, 2.0));
    const Matrix rows = gen.matrix(60, d, -3, 3);
    const auto mses = density::reconstruction_mse_batch(m, rows);
    m.mse_threshold = gen.uniform(0, *std::max_element(mses.begin(), mses.end()));
    const auto lo = density::assess_density_batch(m, rows);
    m.mse_threshold += gen.uniform(0, 0.5);
    const auto hi = density::assess_density_batch(m, rows);
    for (std::size_t r = 0; r < rows.rows(); ++r) density_violations += lo[r].reliable && !hi[r].reliable;
  }
  int label_violations = 0;
  for (int config = 0; config < 100; ++config) {
    const std::size_t n = gen.index(5, 60);
    const Matrix train = gen.matrix(n, 2);
    const auto y_true = gen.bits(n);
    const auto y_pred = gen.bits(n, 0.6);
    const std::size_t k = gen.index(1, std::min<std::size_t>(n, 9));
    const double t_lo = gen.uniform(0, 1);
    const double t_hi = gen.uniform(t_lo, 1);
    const neighbors::NeighborIndex index(train);
    const Matrix points = gen.matrix(40, 2);
    const auto a = localfit::label_synthetic(points, index, y_true, y_pred, k, t_lo);
    const auto b = localfit::label_synthetic(points, index, y_true, y_pred, k, t_hi);
    // Raising the threshold can only turn reliable labels unreliable.
    for (std::size_t p = 0; p < points.rows(); ++p) label_violations += b.labels[p] > a.labels[p];
  }
  return {density_violations == 0 && label_violations == 0,
          "100 + 100 configurations, violations " + std::to_string(density_violations) + " / " +
              std::to_string(label_violations)};
}

Outcome determinism_and_privacy() {
  TempDir dir;
  auto fit_once = [&](const std::string& name) {
    cli::SimulateOptions o;
    o.out_dir = dir / name;
    o.n_train = 300;
    o.n_validation = 100;
    o.n_test = 200;
    o.ood_count = 60;
    std::ostringstream sink;
    return cli::cmd_simulate(o, sink);
  };
  const auto first = fit_once("a");
  fit_once("b");
  const auto text_a = read_file(dir / "a" / "bundle.json");
  if (text_a.empty() || text_a != read_file(dir / "b" / "bundle.json")) {
    return {false, "bundles from identical seeds differ"};
  }
  const auto loaded = bundle::load_bundle(dir / "a" / "bundle.json");
  const auto& test = first.report.data.test.values;
  const auto again = assess_rows(loaded.density, loaded.localfit, test);
  for (std::size_t i = 0; i < again.size(); ++i) {
    if (!(again[i] == first.report.points[i].verdict)) {
      return {false, "verdict differs after reload at row " + std::to_string(i)};
    }
  }
  // Privacy scan: no array shaped like the training set, no training value
  // except the per-feature extremes the scalers must keep.
  const auto j = nlohmann::json::parse(text_a);
  std::vector<std::size_t> sizes;
  std::set<double> numbers;
  std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& node) {
    if (node.is_array()) sizes.push_back(node.size());
    if (node.is_number()) numbers.insert(node.get<double>());
    if (node.is_structured()) {
      for (const auto& child : node) walk(child);
    }
  };
  walk(j);
  const auto& train = first.report.data.train.values;
  for (std::size_t s : sizes) {
    if (s == train.rows() || s == train.rows() * train.cols()) {
      return {false, "bundle holds an array with one entry per training row"};
    }
  }
  std::set<double> extremes(loaded.density.scaler.min().begin(), loaded.density.scaler.min().end());
  extremes.insert(loaded.density.scaler.max().begin(), loaded.density.scaler.max().end());
  std::size_t leaked = 0;
  for (double v : train.data()) leaked += !extremes.count(v) && numbers.count(v);
  return {leaked == 0, "byte-identical bundles, " + std::to_string(again.size()) +
                           " verdicts identical after reload, " + std::to_string(leaked) +
                           " training values found"};
}

Outcome degenerate_handling() {
  oracle::Gen gen(1011);
  const Matrix x = gen.matrix(80, 2);
  auto y = gen.bits(80);
  localfit::LocalFitConfig cfg;
  cfg.proxy_train.epochs = 5;
  const auto fit = localfit::fit_localfit(x, y, y, cfg);
  bool constant = fit.model.proxy.kind == localfit::ProxyKind::Constant;
  for (int i = 0; i < 20 && constant; ++i) constant = localfit::assess_localfit(fit.model, gen.vec(2, -5, 5)).reliable;

  const std::vector<int> ones{1, 1, 1, 1};
  const std::vector<int> pred{1, 0, 1, 1};
  const std::vector<double> score{0.9, 0.2, 0.7, 0.8};
  const auto single = metrics::compute_all(ones, pred, score);
  const bool flagged = !single.balanced_accuracy.defined && !single.auc.defined && !single.mcc.defined;
  const auto all_reliable = evaluate_subsets(ones, pred, score, std::vector<int>{1, 1, 1, 1});
  bool undefined = true;
  for (const auto& [name, v] : metrics::named_values(all_reliable.unreliable)) undefined &= !v.defined;
  for (const auto& [name, v] : metrics::named_values(all_reliable.delta)) undefined &= !v.defined;
  return {constant && flagged && undefined,
          std::string("perfect classifier proxy ") + (constant ? "constant-reliable" : "NOT constant") +
              "; single-class and empty subsets " + (flagged && undefined ? "undefined" : "NOT flagged")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"gradient correctness", gradient_check},
      {"mse oracle", mse_oracle},
      {"knn exactness", knn_exactness},
      {"labeling oracle", labeling_oracle},
      {"auc oracle", auc_oracle},
      {"evaluation fixture", table_fixture},
      {"simulated experiment properties", simulated_experiment},
      {"max-of-training identity", max_of_training_identity},
      {"threshold monotonicity", monotonicity},
      {"determinism, round trip and privacy", determinism_and_privacy},
      {"degenerate handling", degenerate_handling},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str());
  }
  const auto& stats = default_report().localfit_stats;
  std::printf("info  local-fit proxy training accuracy %s (%s proxy, %zu synthetic rows)\n",
              fmt(stats.proxy_train_accuracy).c_str(), localfit::to_string(stats.model.proxy.kind).c_str(),
              stats.synthetic_rows);
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
