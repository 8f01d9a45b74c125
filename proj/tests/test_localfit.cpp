#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "relkit/errors.hpp"
#include "relkit/localfit.hpp"
#include "support/oracles.hpp"

using namespace relkit;
using namespace relkit::localfit;
using relkit::neighbors::NeighborIndex;

namespace {

// Two blobs; the clf is wrong on a band of rows near the boundary.
struct Fixture {
  Matrix x;
  std::vector<int> y_true;
  std::vector<int> y_pred;
};

Fixture blobs(oracle::Gen& gen, std::size_t n) {
  Fixture f{Matrix(0, 2), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double cx = label ? 1.0 : -1.0;
    const std::vector<double> row{cx + gen.uniform(-1.2, 1.2), gen.uniform(-1, 1)};
    f.x.append_row(row);
    f.y_true.push_back(label);
    f.y_pred.push_back(row[0] > 0 ? 1 : 0);
  }
  return f;
}

LocalFitConfig small_config() {
  LocalFitConfig cfg;
  cfg.noise.seed = 5;
  cfg.proxy_train.seed = 6;
  return cfg;
}

}  // namespace

TEST(GenerateSynthetic, RowCounts) {
  oracle::Gen gen(41);
  const Matrix train = gen.matrix(800, 2);
  NoiseConfig one{.sigmas = {0.1}, .copies_per_sigma = 1, .seed = 1};
  EXPECT_EQ(generate_synthetic(train, one).points.rows(), 800u);
  NoiseConfig def;
  const auto s = generate_synthetic(train, def);
  EXPECT_EQ(s.points.rows(), 9600u);
  EXPECT_EQ(s.source_row.size(), 9600u);
  // Ordered by (source row, sigma, copy).
  EXPECT_EQ(s.source_row[0], 0u);
  EXPECT_EQ(s.source_row[11], 0u);
  EXPECT_EQ(s.source_row[12], 1u);
  EXPECT_EQ(s.sigma_index[4], 1u);
  EXPECT_EQ(s.sigma_index[8], 2u);
}

TEST(GenerateSynthetic, DeterministicBySeed) {
  oracle::Gen gen(42);
  const Matrix train = gen.matrix(50, 3);
  NoiseConfig cfg{.seed = 99};
  const auto a = generate_synthetic(train, cfg);
  const auto b = generate_synthetic(train, cfg);
  EXPECT_EQ(a.points, b.points);
  cfg.seed = 100;
  EXPECT_NE(generate_synthetic(train, cfg).points, a.points);
}

TEST(GenerateSynthetic, NoiseScalesWithFeatureStd) {
  oracle::Gen gen(43);
  Matrix train(400, 2);
  for (std::size_t r = 0; r < 400; ++r) {
    train(r, 0) = gen.uniform(-1, 1);
    train(r, 1) = 10.0 * gen.uniform(-1, 1);
  }
  NoiseConfig cfg{.sigmas = {0.2}, .copies_per_sigma = 25, .seed = 3};
  const auto s = generate_synthetic(train, cfg);
  std::vector<double> sum_sq(2, 0.0);
  for (std::size_t i = 0; i < s.points.rows(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double e = s.points(i, j) - train(s.source_row[i], j);
      sum_sq[j] += e * e;
    }
  }
  const double n = static_cast<double>(s.points.rows());
  const double std0 = std::sqrt(1.0 / 3.0);  // uniform(-1, 1)
  EXPECT_NEAR(std::sqrt(sum_sq[0] / n), 0.2 * std0, 0.01);
  EXPECT_NEAR(std::sqrt(sum_sq[1] / n), 0.2 * 10.0 * std0, 0.1);
}

TEST(GenerateSynthetic, ZeroVarianceFallsBackWithWarning) {
  Matrix train(5, 2);
  for (std::size_t r = 0; r < 5; ++r) {
    train(r, 0) = static_cast<double>(r);
    train(r, 1) = 7.0;
  }
  NoiseConfig cfg{.sigmas = {0.5}, .copies_per_sigma = 200, .seed = 3};
  const auto s = generate_synthetic(train, cfg);
  ASSERT_EQ(s.warnings.size(), 1u);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < s.points.rows(); ++i) {
    sum_sq += (s.points(i, 1) - 7.0) * (s.points(i, 1) - 7.0);
  }
  EXPECT_NEAR(std::sqrt(sum_sq / static_cast<double>(s.points.rows())), 0.5, 0.05);
}

TEST(GenerateSynthetic, InvalidConfig) {
  const Matrix train(3, 1, 1.0);
  EXPECT_THROW(generate_synthetic(train, {.sigmas = {}}), ConfigError);
  EXPECT_THROW(generate_synthetic(train, {.sigmas = {0.0}}), ConfigError);
  EXPECT_THROW(generate_synthetic(train, {.copies_per_sigma = 0}), ConfigError);
  EXPECT_THROW(generate_synthetic(Matrix(0, 1), {}), EmptyInputError);
}

TEST(LabelSynthetic, PerfectClassifierLabelsEverythingReliable) {
  oracle::Gen gen(44);
  const NeighborIndex index(gen.matrix(30, 2));
  const auto y = gen.bits(30);
  const Matrix points = gen.matrix(100, 2);
  for (double t : {0.0, 0.5, 1.0}) {
    const auto l = label_synthetic(points, index, y, y, 5, t);
    EXPECT_TRUE(std::all_of(l.labels.begin(), l.labels.end(), [](int v) { return v == 1; }));
  }
}

TEST(LabelSynthetic, OneMistakeAmongFiveFailsPointEightFive) {
  // Five training rows on a line; the query sits among them.
  const Matrix train(6, 1, std::vector<double>{0, 1, 2, 3, 4, 100});
  const NeighborIndex index(train);
  const std::vector<int> y_true{1, 1, 1, 1, 1, 0};
  std::vector<int> y_pred{1, 1, 1, 1, 1, 1};
  const Matrix q(1, 1, std::vector<double>{2});
  auto l = label_synthetic(q, index, y_true, y_pred, 5, 0.85);
  EXPECT_EQ(l.labels[0], 1);
  EXPECT_EQ(l.local_accuracy[0], 1.0);
  y_pred[3] = 0;
  l = label_synthetic(q, index, y_true, y_pred, 5, 0.85);
  EXPECT_EQ(l.labels[0], 0);
  EXPECT_DOUBLE_EQ(l.local_accuracy[0], 0.8);
  // Equality with the threshold counts as reliable.
  EXPECT_EQ(label_synthetic(q, index, y_true, y_pred, 5, 0.8).labels[0], 1);
}

TEST(LabelSynthetic, MatchesBruteForceOracle) {
  oracle::Gen gen(45);
  for (int batch = 0; batch < 50; ++batch) {
    const std::size_t n = gen.index(5, 60);
    const Matrix train = gen.grid_matrix(n, 2, 3);
    const auto y_true = gen.bits(n);
    const auto y_pred = gen.bits(n, 0.7);
    const std::size_t k = gen.index(1, std::min<std::size_t>(n, 9));
    const double t = gen.uniform(0, 1);
    const NeighborIndex index(train);
    const Matrix points = gen.grid_matrix(10, 2, 4);
    const auto got = label_synthetic(points, index, y_true, y_pred, k, t);
    for (std::size_t p = 0; p < points.rows(); ++p) {
      EXPECT_EQ(got.labels[p], oracle::brute_force_label(train, y_true, y_pred, points.row(p), k, t))
          << "batch " << batch << " point " << p;
    }
  }
}

TEST(LabelSynthetic, LocalAccuracyIsAMultipleOfOneOverK) {
  oracle::Gen gen(46);
  const NeighborIndex index(gen.matrix(50, 2));
  const auto y_true = gen.bits(50);
  const auto y_pred = gen.bits(50);
  const auto l = label_synthetic(gen.matrix(200, 2), index, y_true, y_pred, 5, 0.85);
  for (double a : l.local_accuracy) {
    const double scaled = a * 5.0;
    EXPECT_EQ(scaled, std::round(scaled));
  }
}

TEST(LabelSynthetic, ReliableSetShrinksAsThresholdRises) {
  oracle::Gen gen(47);
  for (int config = 0; config < 100; ++config) {
    const std::size_t n = gen.index(5, 50);
    const NeighborIndex index(gen.matrix(n, 2));
    const auto y_true = gen.bits(n);
    const auto y_pred = gen.bits(n, gen.uniform(0.2, 0.9));
    const std::size_t k = gen.index(1, n);
    const double lo = gen.uniform(0, 1);
    const double hi = gen.uniform(lo, 1);
    const Matrix points = gen.matrix(40, 2);
    const auto a = label_synthetic(points, index, y_true, y_pred, k, lo);
    const auto b = label_synthetic(points, index, y_true, y_pred, k, hi);
    for (std::size_t p = 0; p < points.rows(); ++p) {
      EXPECT_LE(b.labels[p], a.labels[p]) << "config " << config;
    }
  }
}

TEST(LabelSynthetic, Errors) {
  const NeighborIndex index(Matrix(3, 1, std::vector<double>{0, 1, 2}));
  const std::vector<int> y{1, 0, 1};
  const std::vector<int> short_y{1, 0};
  const Matrix q(1, 1, 0.5);
  EXPECT_THROW(label_synthetic(q, index, short_y, y, 1, 0.5), ShapeError);
  EXPECT_THROW(label_synthetic(q, index, y, y, 0, 0.5), ParameterError);
  EXPECT_THROW(label_synthetic(q, index, y, y, 4, 0.5), ParameterError);
  EXPECT_THROW(label_synthetic(q, index, y, y, 1, 1.5), ParameterError);
}

TEST(LabelSynthetic, ParallelEqualsSerial) {
  oracle::Gen gen(48);
  const NeighborIndex index(gen.grid_matrix(120, 2, 3));
  const auto y_true = gen.bits(120);
  const auto y_pred = gen.bits(120);
  const Matrix points = gen.grid_matrix(600, 2, 4);
  const auto a = label_synthetic(points, index, y_true, y_pred, 5, 0.6);
  const auto b = label_synthetic_serial(points, index, y_true, y_pred, 5, 0.6);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.local_accuracy, b.local_accuracy);
}

TEST(FitLocalFit, PerfectClassifierGivesConstantReliableProxy) {
  oracle::Gen gen(49);
  const auto f = blobs(gen, 100);
  const auto fit = fit_localfit(f.x, f.y_true, f.y_true, small_config());
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.model.proxy.kind, ProxyKind::Constant);
  EXPECT_EQ(fit.model.proxy.constant_score, 1.0);
  EXPECT_FALSE(fit.warnings.empty());
  for (int i = 0; i < 50; ++i) {
    const auto v = assess_localfit(fit.model, gen.vec(2, -10, 10));
    EXPECT_TRUE(v.reliable);
    EXPECT_EQ(v.score, 1.0);
  }
}

TEST(FitLocalFit, AlwaysWrongClassifierGivesConstantUnreliableProxy) {
  oracle::Gen gen(50);
  const auto f = blobs(gen, 60);
  std::vector<int> flipped(f.y_true.size());
  for (std::size_t i = 0; i < flipped.size(); ++i) flipped[i] = 1 - f.y_true[i];
  const auto fit = fit_localfit(f.x, f.y_true, flipped, small_config());
  EXPECT_EQ(fit.model.proxy.kind, ProxyKind::Constant);
  EXPECT_EQ(fit.model.proxy.constant_score, 0.0);
  EXPECT_FALSE(assess_localfit(fit.model, std::vector<double>{0, 0}).reliable);
}

TEST(FitLocalFit, MlpProxyBeatsMajorityBaseline) {
  oracle::Gen gen(51);
  const auto f = blobs(gen, 400);
  const auto fit = fit_localfit(f.x, f.y_true, f.y_pred, small_config());
  ASSERT_EQ(fit.model.proxy.kind, ProxyKind::Mlp);
  EXPECT_EQ(fit.synthetic_rows, 400u * 12);
  const double majority = std::max(fit.reliable_fraction, 1.0 - fit.reliable_fraction);
  EXPECT_GT(fit.proxy_train_accuracy, majority);
  EXPECT_EQ(fit.model.proxy.network.layer_dims(), default_proxy_dims(2));
}

TEST(FitLocalFit, TreeProxyBeatsMajorityBaseline) {
  oracle::Gen gen(52);
  const auto f = blobs(gen, 400);
  auto cfg = small_config();
  cfg.proxy = ProxyKind::DecisionTree;
  const auto fit = fit_localfit(f.x, f.y_true, f.y_pred, cfg);
  ASSERT_EQ(fit.model.proxy.kind, ProxyKind::DecisionTree);
  const double majority = std::max(fit.reliable_fraction, 1.0 - fit.reliable_fraction);
  EXPECT_GT(fit.proxy_train_accuracy, majority);
  EXPECT_LE(fit.model.proxy.tree.depth(), cfg.tree.max_depth);
}

TEST(FitLocalFit, DeterministicForFixedSeeds) {
  oracle::Gen gen(53);
  const auto f = blobs(gen, 150);
  const auto a = fit_localfit(f.x, f.y_true, f.y_pred, small_config());
  const auto b = fit_localfit(f.x, f.y_true, f.y_pred, small_config());
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.proxy_train_accuracy, b.proxy_train_accuracy);
}

TEST(FitLocalFit, ConfigErrors) {
  oracle::Gen gen(54);
  const auto f = blobs(gen, 10);
  auto cfg = small_config();
  cfg.k = 11;
  EXPECT_THROW(fit_localfit(f.x, f.y_true, f.y_pred, cfg), ConfigError);
  cfg = small_config();
  cfg.decision_cutoff = 1.0;
  EXPECT_THROW(fit_localfit(f.x, f.y_true, f.y_pred, cfg), ConfigError);
  cfg = small_config();
  cfg.proxy = ProxyKind::Constant;
  EXPECT_THROW(fit_localfit(f.x, f.y_true, f.y_pred, cfg), ConfigError);
  const std::vector<int> short_y(3, 1);
  EXPECT_THROW(fit_localfit(f.x, short_y, f.y_pred, small_config()), ShapeError);
}

TEST(AssessLocalFit, VerdictFollowsCutoffAndBatchMatchesSerial) {
  oracle::Gen gen(55);
  const auto f = blobs(gen, 200);
  const auto fit = fit_localfit(f.x, f.y_true, f.y_pred, small_config());
  const Matrix rows = gen.matrix(300, 2, -3, 3);
  const auto batch = assess_localfit_batch(fit.model, rows);
  EXPECT_EQ(batch, assess_localfit_batch_serial(fit.model, rows));
  for (const auto& v : batch) {
    EXPECT_GE(v.score, 0.0);
    EXPECT_LE(v.score, 1.0);
    EXPECT_EQ(v.reliable, v.score >= fit.model.decision_cutoff);
  }
  EXPECT_THROW(assess_localfit(fit.model, std::vector<double>{1.0}), ShapeError);
}

TEST(ProxyKind, StringRoundTrip) {
  for (ProxyKind k : {ProxyKind::Mlp, ProxyKind::DecisionTree, ProxyKind::Constant}) {
    EXPECT_EQ(proxy_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(proxy_kind_from_string("svm"), ConfigError);
}
