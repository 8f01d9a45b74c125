#pragma once

// Two-feature, two-class simulated data with a class-overlap band and an
// out-of-distribution cluster that only appears in the test set.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "relkit/data.hpp"

namespace relkit::sim {

struct Gaussian2 {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 3> cov{1.0, 0.0, 1.0};  // (var_x1, cov_x1x2, var_x2)
};

// Class 0 is centered at class0.mean - (overlap_offset / 2, 0) and class 1
// at class1.mean + (overlap_offset / 2, 0). Smaller offsets widen the
// overlap band around x1 = 0. OOD labels are fair coin flips: the cluster
// carries no class structure the classifier could have learned.
struct SimSpec {
  std::size_t n_train = 800;
  std::size_t n_val = 300;
  std::size_t n_test_in = 3700;
  std::size_t n_test_ood = 1200;
  Gaussian2 class0{{0.0, 0.0}, {1.0, 0.0, 1.6}};
  Gaussian2 class1{{0.0, 0.0}, {1.0, 0.0, 1.6}};
  Gaussian2 ood{{3.5, 6.5}, {0.5, 0.0, 0.5}};
  double overlap_offset = 2.2;
  std::uint64_t seed = 7;

  std::size_t total() const noexcept { return n_train + n_val + n_test_in + n_test_ood; }
  // Throws ConfigError for non-SPD covariances or empty train/validation.
  void validate() const;
};

struct SimData {
  data::FeatureMatrix train;       // features x1, x2 with labels
  data::FeatureMatrix validation;
  data::FeatureMatrix test;        // in-distribution rows first, then OOD rows
  std::vector<int> test_ood;       // 1 marks an OOD row
};

SimData generate_sim(const SimSpec& spec);

}  // namespace relkit::sim
