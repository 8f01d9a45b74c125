#pragma once

// Local-fit check: noisy copies of the training rows are labeled by the
// external classifier's accuracy on each copy's k nearest training rows,
// and a proxy classifier learns those labels. At assessment time only the
// proxy is consulted; no training data is kept.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relkit/data.hpp"
#include "relkit/forest.hpp"
#include "relkit/matrix.hpp"
#include "relkit/neighbors.hpp"
#include "relkit/nnkit.hpp"

namespace relkit::localfit {

struct NoiseConfig {
  // Noise standard deviations as multiples of each feature's training std.
  std::vector<double> sigmas{0.05, 0.1, 0.2};
  int copies_per_sigma = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticPoints {
  Matrix points;  // rows ordered by (source row, sigma, copy)
  std::vector<std::size_t> source_row;
  std::vector<std::size_t> sigma_index;
  std::vector<std::string> warnings;
};

// Emits train[i] + N(0, diag((s * sd_j)^2)) for every row i, sigma s and
// copy. Each point draws from a stream seeded by (seed, i, s, copy).
// Zero-variance features use s * range / 4, or s if the range is also 0.
SyntheticPoints generate_synthetic(const Matrix& train, const NoiseConfig& noise);

struct SyntheticLabels {
  std::vector<int> labels;               // 1 = reliable
  std::vector<double> local_accuracy;    // multiples of 1/k
};

// Label 1 iff the fraction of the k nearest training rows whose recorded
// prediction equals their true label is >= accuracy_threshold.
SyntheticLabels label_synthetic_serial(const Matrix& points,
                                       const neighbors::NeighborIndex& index,
                                       std::span<const int> train_true,
                                       std::span<const int> train_pred, std::size_t k,
                                       double accuracy_threshold);

// OpenMP-parallel over points; identical output to the serial version.
SyntheticLabels label_synthetic(const Matrix& points, const neighbors::NeighborIndex& index,
                                std::span<const int> train_true,
                                std::span<const int> train_pred, std::size_t k,
                                double accuracy_threshold);

enum class ProxyKind { Mlp, DecisionTree, Constant };

std::string to_string(ProxyKind k);
ProxyKind proxy_kind_from_string(const std::string& s);

// The proxy h. Constant is the degenerate model used when every synthetic
// label is the same.
struct Proxy {
  ProxyKind kind = ProxyKind::Constant;
  nn::NetworkModel network;
  forest::DecisionTree tree;
  double constant_score = 1.0;

  // Probability of "reliable" for an already-scaled row.
  double score(std::span<const double> scaled) const;
  bool operator==(const Proxy&) const = default;
};

struct LocalFitModel {
  Proxy proxy;
  data::MinMaxScaler scaler;
  std::size_t k = 5;
  double accuracy_threshold = 0.85;
  double decision_cutoff = 0.5;

  std::size_t dim() const noexcept { return scaler.dim(); }
  void validate() const;
  bool operator==(const LocalFitModel&) const = default;
};

struct LocalFitVerdict {
  double score = 0.0;
  bool reliable = false;
  bool operator==(const LocalFitVerdict&) const = default;
};

struct LocalFitConfig {
  NoiseConfig noise;
  std::size_t k = 5;
  double accuracy_threshold = 0.85;
  double decision_cutoff = 0.5;
  ProxyKind proxy = ProxyKind::Mlp;
  nn::TrainConfig proxy_train{.epochs = 60, .batch_size = 64, .learning_rate = 5e-3};
  forest::TreeConfig tree{.max_depth = 8, .min_samples_leaf = 5};

  void validate() const;
};

// [d, max(8, 2d), max(8, 2d), 1], ReLU hidden layers, Sigmoid output.
std::vector<std::size_t> default_proxy_dims(std::size_t d);

struct LocalFitFit {
  LocalFitModel model;
  std::vector<std::string> warnings;
  std::size_t synthetic_rows = 0;
  double reliable_fraction = 0.0;      // share of synthetic points labeled 1
  double proxy_train_accuracy = 0.0;   // proxy agreement with its labels
  bool degenerate = false;
};

// `train` holds raw rows; scaling, synthesis and labeling all happen in
// min-max scaled space. The classifier itself is never called: only its
// recorded predictions on the training rows are used.
LocalFitFit fit_localfit(const Matrix& train, std::span<const int> train_true,
                         std::span<const int> train_pred, const LocalFitConfig& cfg);

LocalFitVerdict assess_localfit(const LocalFitModel& model, std::span<const double> x);
std::vector<LocalFitVerdict> assess_localfit_batch_serial(const LocalFitModel& model,
                                                          const Matrix& rows);
// OpenMP-parallel over rows; identical output to the serial version.
std::vector<LocalFitVerdict> assess_localfit_batch(const LocalFitModel& model,
                                                   const Matrix& rows);

}  // namespace relkit::localfit
