#include "relkit/density.hpp"

#include <algorithm>
#include <cmath>

namespace relkit::density {

AeArchitecture default_ae_architecture(std::size_t d) {
  using nn::Activation;
  if (d == 0) throw ParameterError("autoencoder input dimension must be >= 1");
  if (d <= 2) return {{d, d + 2, d}, {Activation::Sigmoid, Activation::Linear}};
  const std::size_t hidden = std::max<std::size_t>(2, (3 * d + 3) / 4);
  const std::size_t bottleneck = std::max<std::size_t>(1, (d + 1) / 2);
  return {{d, hidden, bottleneck, hidden, d},
          {Activation::Sigmoid, Activation::Sigmoid, Activation::Sigmoid, Activation::Linear}};
}

void ThresholdPolicy::validate() const {
  switch (kind) {
    case ThresholdKind::PercentileOfValidation:
      if (!(value > 0.0 && value <= 100.0)) {
        throw ConfigError("percentile threshold policy needs p in (0, 100]");
      }
      break;
    case ThresholdKind::Manual:
      if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ConfigError("manual MSE threshold must be finite and >= 0");
      }
      break;
    case ThresholdKind::MaxOfTraining:
      break;
  }
}

std::string to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::PercentileOfValidation: return "percentile_of_validation";
    case ThresholdKind::MaxOfTraining: return "max_of_training";
    case ThresholdKind::Manual: return "manual";
  }
  return "manual";
}

ThresholdKind threshold_kind_from_string(const std::string& s) {
  if (s == "percentile_of_validation" || s == "percentile") {
    return ThresholdKind::PercentileOfValidation;
  }
  if (s == "max_of_training" || s == "max") return ThresholdKind::MaxOfTraining;
  if (s == "manual") return ThresholdKind::Manual;
  throw ConfigError("unknown threshold policy '" + s + "'");
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInputError("percentile of an empty set");
  if (!(p > 0.0 && p <= 100.0)) throw ParameterError("percentile p must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

void DensityModel::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw ShapeError("density model has no features");
  if (autoencoder.input_dim() != d || autoencoder.output_dim() != d) {
    throw ShapeError("autoencoder must map " + std::to_string(d) + " features to " +
                     std::to_string(d));
  }
  if (!(mse_threshold >= 0.0) || !std::isfinite(mse_threshold)) {
    throw ParameterError("MSE threshold must be finite and >= 0");
  }
}

nn::TrainConfig default_train_config(const ThresholdPolicy& policy, std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.epochs = policy.kind == ThresholdKind::MaxOfTraining ? 10000 : 2000;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-3;
  cfg.optimizer = nn::Optimizer::Adam;
  cfg.seed = seed;
  return cfg;
}

void set_threshold(DensityModel& model, const ThresholdPolicy& policy, const Matrix* rows) {
  policy.validate();
  model.policy = policy;
  if (policy.kind == ThresholdKind::Manual) {
    model.mse_threshold = policy.value;
    return;
  }
  if (rows == nullptr || rows->empty()) {
    throw ConfigError(policy.kind == ThresholdKind::PercentileOfValidation
                          ? "percentile threshold policy requires a non-empty validation set"
                          : "max-of-training threshold policy requires training rows");
  }
  const auto mses = reconstruction_mse_batch(model, *rows);
  model.mse_threshold = policy.kind == ThresholdKind::MaxOfTraining
                            ? *std::max_element(mses.begin(), mses.end())
                            : percentile(mses, policy.value);
}

DensityFit fit_density(const Matrix& train, const nn::TrainConfig& cfg,
                       const ThresholdPolicy& policy, const Matrix* validation) {
  policy.validate();
  cfg.validate();
  if (train.empty()) throw EmptyInputError("fit_density: empty training set");
  if (policy.kind == ThresholdKind::PercentileOfValidation &&
      (validation == nullptr || validation->empty())) {
    throw ConfigError("percentile threshold policy requires a non-empty validation set");
  }
  if (validation != nullptr && !validation->empty() && validation->cols() != train.cols()) {
    throw ShapeError("validation width differs from training width");
  }

  DensityFit fit;
  fit.model.scaler = data::MinMaxScaler::fit(train, &fit.warnings);
  const Matrix scaled = fit.model.scaler.transform(train);
  const auto arch = default_ae_architecture(train.cols());
  auto net = nn::NetworkModel::glorot(arch.dims, arch.activations, cfg.seed);
  fit.training = nn::train(std::move(net), scaled, scaled, cfg, nn::Loss::MeanSquaredError);
  fit.model.autoencoder = std::move(fit.training.model);
  fit.training.model = {};

  const Matrix* rows = policy.kind == ThresholdKind::MaxOfTraining ? &train : validation;
  set_threshold(fit.model, policy, rows);
  return fit;
}

double reconstruction_mse(const DensityModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ShapeError("density: input has " + std::to_string(x.size()) +
                     " features, model expects " + std::to_string(model.dim()));
  }
  const auto scaled = model.scaler.transform(x);
  return nn::mse_loss(scaled, nn::forward(model.autoencoder, scaled));
}

DensityVerdict assess_density(const DensityModel& model, std::span<const double> x) {
  const double mse = reconstruction_mse(model, x);
  return {mse, mse <= model.mse_threshold};
}

std::vector<double> reconstruction_mse_batch_serial(const DensityModel& model,
                                                    const Matrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = reconstruction_mse(model, rows.row(r));
  return out;
}

std::vector<double> reconstruction_mse_batch(const DensityModel& model, const Matrix& rows) {
  if (!rows.empty() && rows.cols() != model.dim()) {
    throw ShapeError("density: input has " + std::to_string(rows.cols()) +
                     " features, model expects " + std::to_string(model.dim()));
  }
  std::vector<double> out(rows.rows());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    out[i] = reconstruction_mse(model, rows.row(i));
  }
  return out;
}

std::vector<DensityVerdict> assess_density_batch(const DensityModel& model, const Matrix& rows) {
  const auto mses = reconstruction_mse_batch(model, rows);
  std::vector<DensityVerdict> out;
  out.reserve(mses.size());
  for (double mse : mses) out.push_back({mse, mse <= model.mse_threshold});
  return out;
}

}  // namespace relkit::density
