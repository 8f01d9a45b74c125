#include "relkit/sim.hpp"

#include <cmath>
#include <random>

#include "relkit/random.hpp"

namespace relkit::sim {

namespace {

void check_spd(const Gaussian2& g, const char* name) {
  const auto [a, b, c] = g.cov;
  if (!(a > 0.0) || !(a * c - b * b > 0.0) || !std::isfinite(a * c)) {
    throw ConfigError(std::string("simulation: covariance of ") + name +
                      " is not symmetric positive definite");
  }
}

class Sampler {
 public:
  Sampler(const Gaussian2& g, std::array<double, 2> shift)
      : mean_{g.mean[0] + shift[0], g.mean[1] + shift[1]} {
    const auto [a, b, c] = g.cov;
    l11_ = std::sqrt(a);
    l21_ = b / l11_;
    l22_ = std::sqrt(c - l21_ * l21_);
  }

  std::array<double, 2> draw(std::mt19937_64& rng) {
    const double z1 = gauss_(rng);
    const double z2 = gauss_(rng);
    return {mean_[0] + l11_ * z1, mean_[1] + l21_ * z1 + l22_ * z2};
  }

 private:
  std::array<double, 2> mean_;
  double l11_ = 1.0, l21_ = 0.0, l22_ = 1.0;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

data::FeatureMatrix empty_set() {
  data::FeatureMatrix m;
  m.feature_names = {"x1", "x2"};
  m.values = Matrix(0, 2);
  m.labels.emplace();
  return m;
}

// Alternating classes, starting with class 0: equal class counts for even n.
data::FeatureMatrix draw_balanced(const SimSpec& spec, std::size_t n, std::uint64_t stream) {
  std::mt19937_64 rng(derive_seed(spec.seed, {stream}));
  Sampler c0(spec.class0, {-spec.overlap_offset / 2.0, 0.0});
  Sampler c1(spec.class1, {spec.overlap_offset / 2.0, 0.0});
  data::FeatureMatrix m = empty_set();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const auto p = label == 0 ? c0.draw(rng) : c1.draw(rng);
    m.values.append_row(p);
    m.labels->push_back(label);
  }
  return m;
}

}  // namespace

void SimSpec::validate() const {
  check_spd(class0, "class 0");
  check_spd(class1, "class 1");
  check_spd(ood, "the OOD cluster");
  if (n_train < 4 || n_val < 1) {
    throw ConfigError("simulation: need at least 4 training rows and 1 validation row");
  }
  if (!std::isfinite(overlap_offset)) throw ConfigError("simulation: overlap_offset must be finite");
}

SimData generate_sim(const SimSpec& spec) {
  spec.validate();
  SimData out;
  out.train = draw_balanced(spec, spec.n_train, 1);
  out.validation = draw_balanced(spec, spec.n_val, 2);
  out.test = draw_balanced(spec, spec.n_test_in, 3);
  out.test_ood.assign(spec.n_test_in, 0);

  std::mt19937_64 rng(derive_seed(spec.seed, {4}));
  Sampler ood(spec.ood, {0.0, 0.0});
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < spec.n_test_ood; ++i) {
    out.test.values.append_row(ood.draw(rng));
    out.test.labels->push_back(coin(rng) ? 1 : 0);
    out.test_ood.push_back(1);
  }
  return out;
}

}  // namespace relkit::sim
