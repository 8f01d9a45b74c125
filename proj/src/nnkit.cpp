#include "relkit/nnkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace relkit::nn {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                      : std::exp(z) / (1.0 + std::exp(z));
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Linear:
      return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output y = f(z).
double activate_derivative(Activation a, double z, double y) {
  switch (a) {
    case Activation::ReLU:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid:
      return y * (1.0 - y);
    case Activation::Tanh:
      return 1.0 - y * y;
    case Activation::Linear:
      return 1.0;
  }
  return 1.0;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Pre-activations and outputs of every layer for one sample.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> out;

  explicit Trace(const NetworkModel& model) {
    for (const auto& layer : model.layers()) {
      pre.emplace_back(layer.fan_out);
      out.emplace_back(layer.fan_out);
    }
  }
};

void check_input(const NetworkModel& model, std::span<const double> x) {
  if (model.num_layers() == 0) throw ShapeError("network has no layers");
  if (x.size() != model.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.size()) +
                     " values, network expects " +
                     std::to_string(model.input_dim()));
  }
}

void run_forward(const NetworkModel& model, std::span<const double> x,
                 Trace& trace) {
  std::span<const double> in = x;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const DenseLayer& layer = model.layers()[l];
    auto& pre = trace.pre[l];
    auto& out = trace.out[l];
    for (std::size_t o = 0; o < layer.fan_out; ++o) {
      const double* w = layer.weights.data() + o * layer.fan_in;
      double z = layer.bias[o];
      for (std::size_t i = 0; i < layer.fan_in; ++i) z += w[i] * in[i];
      pre[o] = z;
      out[o] = activate(layer.activation, z);
    }
    in = out;
  }
}

double loss_from_trace(const Trace& trace,
                       std::span<const double> target, Loss loss) {
  const auto& out = trace.out.back();
  if (loss == Loss::MeanSquaredError) return mse_loss(target, out);
  const auto& pre = trace.pre.back();
  double total = 0.0;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    total += softplus(pre[i]) - target[i] * pre[i];
  }
  return total / static_cast<double>(pre.size());
}

void check_target(const NetworkModel& model, std::span<const double> target,
                  Loss loss) {
  if (target.size() != model.output_dim()) {
    throw ShapeError("target has " + std::to_string(target.size()) +
                     " values, network outputs " +
                     std::to_string(model.output_dim()));
  }
  if (loss == Loss::BinaryCrossEntropy &&
      model.layers().back().activation != Activation::Sigmoid) {
    throw ParameterError("binary cross-entropy needs a Sigmoid output layer");
  }
}

// Accumulates scale * dLoss/dparam into `grads`. `delta` is scratch space.
void run_backward(const NetworkModel& model, std::span<const double> x,
                  const Trace& trace, std::span<const double> target,
                  Loss loss, double scale, Gradients& grads,
                  std::vector<std::vector<double>>& delta) {
  const std::size_t last = model.num_layers() - 1;
  {
    const DenseLayer& layer = model.layers()[last];
    const auto& out = trace.out[last];
    const auto& pre = trace.pre[last];
    const double n = static_cast<double>(layer.fan_out);
    for (std::size_t o = 0; o < layer.fan_out; ++o) {
      if (loss == Loss::MeanSquaredError) {
        delta[last][o] = 2.0 * (out[o] - target[o]) / n *
                         activate_derivative(layer.activation, pre[o], out[o]);
      } else {
        // d/dz [softplus(z) - t z] = sigmoid(z) - t
        delta[last][o] = (out[o] - target[o]) / n;
      }
    }
  }
  for (std::size_t l = last + 1; l-- > 0;) {
    const DenseLayer& layer = model.layers()[l];
    std::span<const double> in = l == 0 ? x : std::span<const double>(trace.out[l - 1]);
    auto& gw = grads.weights[l];
    auto& gb = grads.bias[l];
    for (std::size_t o = 0; o < layer.fan_out; ++o) {
      const double d = delta[l][o] * scale;
      gb[o] += d;
      double* g = gw.data() + o * layer.fan_in;
      for (std::size_t i = 0; i < layer.fan_in; ++i) g[i] += d * in[i];
    }
    if (l == 0) break;
    const DenseLayer& below = model.layers()[l - 1];
    for (std::size_t i = 0; i < layer.fan_in; ++i) {
      double sum = 0.0;
      for (std::size_t o = 0; o < layer.fan_out; ++o) {
        sum += layer.weights[o * layer.fan_in + i] * delta[l][o];
      }
      delta[l - 1][i] =
          sum * activate_derivative(below.activation, trace.pre[l - 1][i],
                                    trace.out[l - 1][i]);
    }
  }
}

std::vector<std::vector<double>> make_delta(const NetworkModel& model) {
  std::vector<std::vector<double>> delta;
  for (const auto& layer : model.layers()) delta.emplace_back(layer.fan_out);
  return delta;
}

struct AdamState {
  Gradients m;
  Gradients v;
  long step = 0;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void apply_update(NetworkModel& model, const Gradients& g,
                  const TrainConfig& cfg, AdamState& adam) {
  auto& layers = model.layers_mut();
  if (cfg.optimizer == Optimizer::SGD) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
        layers[l].weights[i] -= cfg.learning_rate * g.weights[l][i];
      }
      for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
        layers[l].bias[i] -= cfg.learning_rate * g.bias[l][i];
      }
    }
    return;
  }
  ++adam.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam.step));
  auto step = [&](std::vector<double>& param, const std::vector<double>& grad,
                  std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    step(layers[l].weights, g.weights[l], adam.m.weights[l], adam.v.weights[l]);
    step(layers[l].bias, g.bias[l], adam.m.bias[l], adam.v.bias[l]);
  }
}

void zero(Gradients& g) {
  for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : g.bias) std::fill(b.begin(), b.end(), 0.0);
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

std::string_view to_string(Optimizer o) {
  return o == Optimizer::Adam ? "adam" : "sgd";
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  if (s == "linear") return Activation::Linear;
  throw ParseError("unknown activation '" + std::string(s) + "'");
}

Optimizer optimizer_from_string(std::string_view s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "sgd") return Optimizer::SGD;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

NetworkModel::NetworkModel(std::vector<DenseLayer> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.fan_in == 0 || layer.fan_out == 0) {
      throw ShapeError("layer " + std::to_string(l) + " has a zero dimension");
    }
    if (layer.weights.size() != layer.fan_in * layer.fan_out ||
        layer.bias.size() != layer.fan_out) {
      throw ShapeError("layer " + std::to_string(l) +
                       " buffers do not match its dimensions");
    }
    if (l > 0 && layers_[l - 1].fan_out != layer.fan_in) {
      throw ShapeError("layer " + std::to_string(l) +
                       " input width does not match previous layer output");
    }
  }
}

NetworkModel NetworkModel::glorot(std::span<const std::size_t> dims,
                                  std::span<const Activation> activations,
                                  std::uint64_t seed) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw ShapeError("need len(dims) - 1 activations and at least two dims");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.fan_in = dims[l];
    layer.fan_out = dims[l + 1];
    layer.activation = activations[l];
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weights.resize(layer.fan_in * layer.fan_out);
    for (double& w : layer.weights) w = dist(rng);
    layer.bias.assign(layer.fan_out, 0.0);
    layers.push_back(std::move(layer));
  }
  return NetworkModel(std::move(layers));
}

std::vector<std::size_t> NetworkModel::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers_.empty()) return dims;
  dims.push_back(layers_.front().fan_in);
  for (const auto& layer : layers_) dims.push_back(layer.fan_out);
  return dims;
}

std::vector<Activation> NetworkModel::activations() const {
  std::vector<Activation> acts;
  for (const auto& layer : layers_) acts.push_back(layer.activation);
  return acts;
}

std::size_t NetworkModel::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().fan_in;
}

std::size_t NetworkModel::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().fan_out;
}

std::size_t NetworkModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

bool NetworkModel::all_finite() const {
  for (const auto& layer : layers_) {
    for (double w : layer.weights) if (!std::isfinite(w)) return false;
    for (double b : layer.bias) if (!std::isfinite(b)) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const NetworkModel& model) {
  Gradients g;
  for (const auto& layer : model.layers()) {
    g.weights.emplace_back(layer.weights.size(), 0.0);
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) {
      weights[l][i] += scale * other.weights[l][i];
    }
    for (std::size_t i = 0; i < bias[l].size(); ++i) {
      bias[l][i] += scale * other.bias[l][i];
    }
  }
}

std::vector<double> forward(const NetworkModel& model,
                            std::span<const double> x) {
  check_input(model, x);
  Trace trace(model);
  run_forward(model, x, trace);
  return std::move(trace.out.back());
}

double mse_loss(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    throw ShapeError("mse_loss: vectors of length " + std::to_string(y.size()) +
                     " and " + std::to_string(y_hat.size()));
  }
  if (y.empty()) throw EmptyInputError("mse_loss: empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double diff = y[i] - y_hat[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(y.size());
}

double sample_loss(const NetworkModel& model, std::span<const double> x,
                   std::span<const double> target, Loss loss) {
  check_input(model, x);
  check_target(model, target, loss);
  Trace trace(model);
  run_forward(model, x, trace);
  return loss_from_trace(trace, target, loss);
}

double mean_loss(const NetworkModel& model, const Matrix& inputs,
                 const Matrix& targets, Loss loss) {
  if (inputs.rows() != targets.rows()) {
    throw ShapeError("inputs and targets have different row counts");
  }
  if (inputs.empty()) throw EmptyInputError("mean_loss: no rows");
  Trace trace(model);
  double total = 0.0;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    check_input(model, inputs.row(r));
    check_target(model, targets.row(r), loss);
    run_forward(model, inputs.row(r), trace);
    total += loss_from_trace(trace, targets.row(r), loss);
  }
  return total / static_cast<double>(inputs.rows());
}

Gradients backward(const NetworkModel& model, std::span<const double> x,
                   std::span<const double> target, Loss loss) {
  check_input(model, x);
  check_target(model, target, loss);
  Trace trace(model);
  run_forward(model, x, trace);
  Gradients grads = Gradients::zeros_like(model);
  auto delta = make_delta(model);
  run_backward(model, x, trace, target, loss, 1.0, grads, delta);
  return grads;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train: learning_rate must be a positive finite number");
  }
}

TrainResult train(NetworkModel model, const Matrix& inputs,
                  const Matrix& targets, const TrainConfig& cfg, Loss loss) {
  cfg.validate();
  if (inputs.rows() != targets.rows()) {
    throw ShapeError("train: inputs have " + std::to_string(inputs.rows()) +
                     " rows, targets have " + std::to_string(targets.rows()));
  }
  if (inputs.empty()) throw EmptyInputError("train: no training rows");
  if (inputs.cols() != model.input_dim() || targets.cols() != model.output_dim()) {
    throw ShapeError("train: data width does not match the network");
  }
  check_target(model, targets.row(0), loss);

  TrainResult result;
  result.initial_loss = mean_loss(model, inputs, targets, loss);

  const std::size_t n = inputs.rows();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);

  Trace trace(model);
  auto delta = make_delta(model);
  Gradients grads = Gradients::zeros_like(model);
  AdamState adam{Gradients::zeros_like(model), Gradients::zeros_like(model), 0};
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const double scale = 1.0 / static_cast<double>(stop - start);
      zero(grads);
      double batch_total = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t r = order[b];
        run_forward(model, inputs.row(r), trace);
        batch_total += loss_from_trace(trace, targets.row(r), loss);
        run_backward(model, inputs.row(r), trace, targets.row(r), loss, scale,
                     grads, delta);
      }
      if (!std::isfinite(batch_total)) {
        throw DivergenceError(epoch, "training diverged: non-finite loss in epoch " +
                                         std::to_string(epoch));
      }
      epoch_total += batch_total;
      apply_update(model, grads, cfg, adam);
    }
    if (!model.all_finite()) {
      throw DivergenceError(epoch, "training diverged: non-finite parameter after epoch " +
                                       std::to_string(epoch));
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(n));
  }

  result.final_loss = mean_loss(model, inputs, targets, loss);
  if (!std::isfinite(result.final_loss)) {
    throw DivergenceError(cfg.epochs - 1, "training diverged: non-finite final loss");
  }
  result.model = std::move(model);
  return result;
}

}  // namespace relkit::nn
