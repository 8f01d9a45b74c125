#pragma once

// Small dense feed-forward network engine: evaluation, backpropagation and
// mini-batch training with SGD or Adam. Used for the reconstruction
// autoencoder and for the local-fit proxy classifier.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relkit/matrix.hpp"

namespace relkit::nn {

enum class Activation { ReLU, Sigmoid, Tanh, Linear };

// MeanSquaredError averages over the output coordinates of one sample.
// BinaryCrossEntropy requires a Sigmoid output layer and is evaluated from
// the pre-activation so that saturated outputs do not produce log(0).
enum class Loss { MeanSquaredError, BinaryCrossEntropy };

enum class Optimizer { SGD, Adam };

std::string_view to_string(Activation a);
std::string_view to_string(Optimizer o);
Activation activation_from_string(std::string_view s);
Optimizer optimizer_from_string(std::string_view s);

struct DenseLayer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::vector<double> weights;  // fan_out x fan_in, row-major
  std::vector<double> bias;     // fan_out
  Activation activation = Activation::Linear;

  double weight(std::size_t out, std::size_t in) const {
    return weights[out * fan_in + in];
  }
  bool operator==(const DenseLayer&) const = default;
};

class NetworkModel {
 public:
  NetworkModel() = default;
  // Validates shapes: consecutive layers must chain and every buffer must
  // match its declared dimensions.
  explicit NetworkModel(std::vector<DenseLayer> layers);

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  // `dims` has one more entry than `activations`.
  static NetworkModel glorot(std::span<const std::size_t> dims,
                             std::span<const Activation> activations,
                             std::uint64_t seed);

  std::vector<std::size_t> layer_dims() const;
  std::vector<Activation> activations() const;
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  // Mutable access for optimizers; the layer shapes must not be changed.
  std::vector<DenseLayer>& layers_mut() noexcept { return layers_; }

  bool operator==(const NetworkModel&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

// Gradient of a per-sample loss with respect to every weight and bias,
// laid out exactly like the model's layers.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const NetworkModel& model);
  void add_scaled(const Gradients& other, double scale);
};

std::vector<double> forward(const NetworkModel& model,
                            std::span<const double> x);

// (1/n) * sum (y_i - y_hat_i)^2
double mse_loss(std::span<const double> y, std::span<const double> y_hat);

// Per-sample loss of the model's output for `x` against `target`.
double sample_loss(const NetworkModel& model, std::span<const double> x,
                   std::span<const double> target, Loss loss);

// Mean per-sample loss over matching rows of `inputs` and `targets`.
double mean_loss(const NetworkModel& model, const Matrix& inputs,
                 const Matrix& targets, Loss loss);

Gradients backward(const NetworkModel& model, std::span<const double> x,
                   std::span<const double> target, Loss loss);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct TrainResult {
  NetworkModel model;
  // Sample-weighted mean of the mini-batch losses seen during each epoch,
  // each evaluated before that batch's update.
  std::vector<double> epoch_loss;
  double initial_loss = 0.0;  // full-data loss before the first update
  double final_loss = 0.0;    // full-data loss after the last update
};

// Trains a copy of `model`. The result depends only on the arguments:
// shuffling and any randomness derive from cfg.seed. Throws DivergenceError
// if a batch loss or parameter becomes non-finite.
TrainResult train(NetworkModel model, const Matrix& inputs,
                  const Matrix& targets, const TrainConfig& cfg, Loss loss);

}  // namespace relkit::nn
