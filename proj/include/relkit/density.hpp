#pragma once

// Density check: an autoencoder trained on min-max scaled training rows
// reconstructs in-distribution inputs well. A row is reliable when its
// reconstruction MSE does not exceed the fitted threshold.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relkit/data.hpp"
#include "relkit/matrix.hpp"
#include "relkit/nnkit.hpp"

namespace relkit::density {

struct AeArchitecture {
  std::vector<std::size_t> dims;
  std::vector<nn::Activation> activations;
};

// d <= 2:  [d, d+2, d]
// d >= 3:  [d, h, b, h, d] with h = max(2, ceil(3d/4)), b = max(1, ceil(d/2))
// Hidden layers are Sigmoid, the output layer Linear.
AeArchitecture default_ae_architecture(std::size_t d);

enum class ThresholdKind { PercentileOfValidation, MaxOfTraining, Manual };

struct ThresholdPolicy {
  ThresholdKind kind = ThresholdKind::PercentileOfValidation;
  double value = 98.0;  // percentile p for PercentileOfValidation, T for Manual

  static ThresholdPolicy percentile_of_validation(double p) {
    return {ThresholdKind::PercentileOfValidation, p};
  }
  static ThresholdPolicy max_of_training() { return {ThresholdKind::MaxOfTraining, 0.0}; }
  static ThresholdPolicy manual(double t) { return {ThresholdKind::Manual, t}; }

  void validate() const;
  bool operator==(const ThresholdPolicy&) const = default;
};

std::string to_string(ThresholdKind k);
ThresholdKind threshold_kind_from_string(const std::string& s);

// p-th percentile (0 < p <= 100) with linear interpolation between the
// closest ranks: position (p/100) * (n-1) in the sorted values.
double percentile(std::vector<double> values, double p);

struct DensityModel {
  nn::NetworkModel autoencoder;
  data::MinMaxScaler scaler;
  double mse_threshold = 0.0;
  ThresholdPolicy policy;

  std::size_t dim() const noexcept { return scaler.dim(); }
  // Checks the autoencoder is square in d, the scaler has d entries and the
  // threshold is finite and non-negative.
  void validate() const;
  bool operator==(const DensityModel&) const = default;
};

struct DensityVerdict {
  double mse = 0.0;
  bool reliable = false;
  bool operator==(const DensityVerdict&) const = default;
};

struct DensityFit {
  DensityModel model;
  std::vector<std::string> warnings;
  nn::TrainResult training;  // training.model is moved into `model`
};

// 10000 epochs for MaxOfTraining, 2000 otherwise; Adam, lr 1e-3, batch 32.
nn::TrainConfig default_train_config(const ThresholdPolicy& policy, std::uint64_t seed = 0);

// `validation` is required (non-null, non-empty) for PercentileOfValidation.
DensityFit fit_density(const Matrix& train, const nn::TrainConfig& cfg,
                       const ThresholdPolicy& policy,
                       const Matrix* validation = nullptr);

// Replaces the threshold of an existing model according to `policy`.
// `rows` supplies the raw rows the policy is evaluated on (training rows
// for MaxOfTraining, validation rows for the percentile policy).
void set_threshold(DensityModel& model, const ThresholdPolicy& policy,
                   const Matrix* rows);

double reconstruction_mse(const DensityModel& model, std::span<const double> x);
DensityVerdict assess_density(const DensityModel& model, std::span<const double> x);

std::vector<double> reconstruction_mse_batch_serial(const DensityModel& model, const Matrix& rows);
// OpenMP-parallel over rows; identical output to the serial version.
std::vector<double> reconstruction_mse_batch(const DensityModel& model, const Matrix& rows);
std::vector<DensityVerdict> assess_density_batch(const DensityModel& model, const Matrix& rows);

}  // namespace relkit::density
