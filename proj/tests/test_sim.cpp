#include <gtest/gtest.h>

#include <cmath>

#include "relkit/density.hpp"
#include "relkit/errors.hpp"
#include "relkit/sim.hpp"

using namespace relkit;
using namespace relkit::sim;

namespace {

std::array<double, 2> centroid(const Matrix& m) {
  std::array<double, 2> c{0.0, 0.0};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    c[0] += m(r, 0);
    c[1] += m(r, 1);
  }
  c[0] /= static_cast<double>(m.rows());
  c[1] /= static_cast<double>(m.rows());
  return c;
}

}  // namespace

TEST(Sim, DefaultCounts) {
  const auto d = generate_sim(SimSpec{});
  EXPECT_EQ(d.train.rows(), 800u);
  EXPECT_EQ(d.validation.rows(), 300u);
  EXPECT_EQ(d.test.rows(), 4900u);
  EXPECT_EQ(d.test_ood.size(), 4900u);
  EXPECT_EQ(std::count(d.test_ood.begin(), d.test_ood.end(), 1), 1200);
  EXPECT_EQ(std::count(d.train.labels->begin(), d.train.labels->end(), 1), 400);
  for (std::size_t i = 0; i < 3700; ++i) EXPECT_EQ(d.test_ood[i], 0);
  EXPECT_EQ(d.train.feature_names, (std::vector<std::string>{"x1", "x2"}));
}

TEST(Sim, SeedDeterminism) {
  SimSpec spec;
  spec.n_test_in = 100;
  spec.n_test_ood = 50;
  const auto a = generate_sim(spec);
  const auto b = generate_sim(spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  spec.seed = 8;
  EXPECT_NE(generate_sim(spec).train, a.train);
}

TEST(Sim, ClassMeansSitEitherSideOfTheOverlapBand) {
  const auto d = generate_sim(SimSpec{});
  double m0 = 0.0;
  double m1 = 0.0;
  for (std::size_t r = 0; r < d.train.rows(); ++r) {
    ((*d.train.labels)[r] ? m1 : m0) += d.train.values(r, 0) / 400.0;
  }
  EXPECT_NEAR(m0, -1.1, 0.15);
  EXPECT_NEAR(m1, 1.1, 0.15);
}

TEST(Sim, OodRowsLieFartherFromTheTrainingCentroid) {
  const auto d = generate_sim(SimSpec{});
  const auto c = centroid(d.train.values);
  double in_sum = 0.0;
  double ood_sum = 0.0;
  for (std::size_t r = 0; r < d.test.rows(); ++r) {
    const double dist = std::hypot(d.test.values(r, 0) - c[0], d.test.values(r, 1) - c[1]);
    (d.test_ood[r] ? ood_sum : in_sum) += dist;
  }
  EXPECT_GT(ood_sum / 1200.0, 2.0 * in_sum / 3700.0);
}

TEST(Sim, RejectsNonSpdCovariance) {
  SimSpec spec;
  spec.ood.cov = {1.0, 2.0, 1.0};
  EXPECT_THROW(generate_sim(spec), ConfigError);
  spec = SimSpec{};
  spec.class0.cov = {-1.0, 0.0, 1.0};
  EXPECT_THROW(generate_sim(spec), ConfigError);
  spec = SimSpec{};
  spec.n_train = 0;
  EXPECT_THROW(generate_sim(spec), ConfigError);
}

TEST(Sim, FartherOodNeverLowersTheDensityUnreliableCount) {
  SimSpec spec;
  spec.n_test_in = 0;
  spec.n_test_ood = 400;
  const auto base = generate_sim(spec);
  const auto policy = density::ThresholdPolicy::percentile_of_validation(98.0);
  const auto fit = density::fit_density(base.train.values, density::default_train_config(policy, 13),
                                        policy, &base.validation.values);
  std::size_t previous = 0;
  for (double scale : {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}) {
    SimSpec shifted = spec;
    shifted.ood.mean = {3.5 * scale, 6.5 * scale};
    const auto d = generate_sim(shifted);
    std::size_t flagged = 0;
    for (const auto& v : density::assess_density_batch(fit.model, d.test.values)) flagged += !v.reliable;
    EXPECT_GE(flagged, previous) << "scale " << scale;
    previous = flagged;
  }
  EXPECT_EQ(previous, 400u);
}
