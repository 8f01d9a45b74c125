#include "relkit/localfit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "relkit/random.hpp"

namespace relkit::localfit {

namespace {

void check_labels(const neighbors::NeighborIndex& index, std::span<const int> train_true,
                  std::span<const int> train_pred, std::size_t k, double threshold) {
  if (train_true.size() != index.size() || train_pred.size() != index.size()) {
    throw ShapeError("label_synthetic: " + std::to_string(index.size()) +
                     " training rows but " + std::to_string(train_true.size()) +
                     " labels and " + std::to_string(train_pred.size()) + " predictions");
  }
  if (k == 0 || k > index.size()) {
    throw ParameterError("label_synthetic: k must be in [1, " + std::to_string(index.size()) + "]");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ParameterError("label_synthetic: accuracy threshold must be in [0, 1]");
  }
}

double local_accuracy(const std::vector<neighbors::Neighbor>& nn,
                      std::span<const int> train_true, std::span<const int> train_pred) {
  std::size_t correct = 0;
  for (const auto& n : nn) correct += train_true[n.id] == train_pred[n.id];
  return static_cast<double>(correct) / static_cast<double>(nn.size());
}

}  // namespace

void NoiseConfig::validate() const {
  if (sigmas.empty()) throw ConfigError("noise: sigmas must not be empty");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("noise: every sigma must be > 0");
  }
  if (copies_per_sigma < 1) throw ConfigError("noise: copies_per_sigma must be >= 1");
}

SyntheticPoints generate_synthetic(const Matrix& train, const NoiseConfig& noise) {
  noise.validate();
  if (train.empty()) throw EmptyInputError("generate_synthetic: empty training set");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();

  SyntheticPoints out;
  std::vector<double> scale(d);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    double lo = train(0, j);
    double hi = lo;
    for (std::size_t r = 0; r < n; ++r) {
      mean += train(r, j);
      lo = std::min(lo, train(r, j));
      hi = std::max(hi, train(r, j));
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (train(r, j) - mean) * (train(r, j) - mean);
    var /= static_cast<double>(n);
    if (var > 0.0) {
      scale[j] = std::sqrt(var);
    } else {
      scale[j] = hi > lo ? (hi - lo) / 4.0 : 1.0;
      out.warnings.push_back("feature " + std::to_string(j) +
                             " has zero variance; noise scale falls back to " +
                             (hi > lo ? std::string("range / 4") : std::string("1.0")));
    }
  }

  const std::size_t n_sigma = noise.sigmas.size();
  const auto m = static_cast<std::size_t>(noise.copies_per_sigma);
  const std::size_t total = n * n_sigma * m;
  out.points = Matrix(total, d);
  out.source_row.resize(total);
  out.sigma_index.resize(total);
  const auto count = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto idx = static_cast<std::size_t>(t);
    const std::size_t row = idx / (n_sigma * m);
    const std::size_t s = (idx / m) % n_sigma;
    const std::size_t copy = idx % m;
    std::mt19937_64 rng(derive_seed(noise.seed, {row, s, copy}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto dst = out.points.row(idx);
    const auto src = train.row(row);
    for (std::size_t j = 0; j < d; ++j) {
      dst[j] = src[j] + gauss(rng) * noise.sigmas[s] * scale[j];
    }
    out.source_row[idx] = row;
    out.sigma_index[idx] = s;
  }
  return out;
}

SyntheticLabels label_synthetic_serial(const Matrix& points,
                                       const neighbors::NeighborIndex& index,
                                       std::span<const int> train_true,
                                       std::span<const int> train_pred, std::size_t k,
                                       double accuracy_threshold) {
  check_labels(index, train_true, train_pred, k, accuracy_threshold);
  SyntheticLabels out;
  out.labels.resize(points.rows());
  out.local_accuracy.resize(points.rows());
  for (std::size_t p = 0; p < points.rows(); ++p) {
    const double acc = local_accuracy(index.knn(points.row(p), k), train_true, train_pred);
    out.local_accuracy[p] = acc;
    out.labels[p] = acc >= accuracy_threshold ? 1 : 0;
  }
  return out;
}

SyntheticLabels label_synthetic(const Matrix& points, const neighbors::NeighborIndex& index,
                                std::span<const int> train_true,
                                std::span<const int> train_pred, std::size_t k,
                                double accuracy_threshold) {
  check_labels(index, train_true, train_pred, k, accuracy_threshold);
  if (!points.empty() && points.cols() != index.dim()) {
    throw ShapeError("label_synthetic: point width differs from index width");
  }
  SyntheticLabels out;
  out.labels.resize(points.rows());
  out.local_accuracy.resize(points.rows());
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto p = static_cast<std::size_t>(t);
    const double acc = local_accuracy(index.knn(points.row(p), k), train_true, train_pred);
    out.local_accuracy[p] = acc;
    out.labels[p] = acc >= accuracy_threshold ? 1 : 0;
  }
  return out;
}

std::string to_string(ProxyKind k) {
  switch (k) {
    case ProxyKind::Mlp: return "mlp";
    case ProxyKind::DecisionTree: return "decision_tree";
    case ProxyKind::Constant: return "constant";
  }
  return "constant";
}

ProxyKind proxy_kind_from_string(const std::string& s) {
  if (s == "mlp") return ProxyKind::Mlp;
  if (s == "decision_tree" || s == "tree") return ProxyKind::DecisionTree;
  if (s == "constant") return ProxyKind::Constant;
  throw ConfigError("unknown proxy kind '" + s + "'");
}

double Proxy::score(std::span<const double> scaled) const {
  switch (kind) {
    case ProxyKind::Mlp:
      return nn::forward(network, scaled).front();
    case ProxyKind::DecisionTree:
      return tree.predict_proba(scaled);
    case ProxyKind::Constant:
      return constant_score;
  }
  return constant_score;
}

void LocalFitModel::validate() const {
  if (dim() == 0) throw ShapeError("local-fit model has no features");
  if (k == 0) throw ParameterError("local-fit model: k must be >= 1");
  if (!(accuracy_threshold >= 0.0 && accuracy_threshold <= 1.0)) {
    throw ParameterError("local-fit model: accuracy threshold must be in [0, 1]");
  }
  if (!(decision_cutoff > 0.0 && decision_cutoff < 1.0)) {
    throw ParameterError("local-fit model: decision cutoff must be in (0, 1)");
  }
  if (proxy.kind == ProxyKind::Mlp &&
      (proxy.network.input_dim() != dim() || proxy.network.output_dim() != 1)) {
    throw ShapeError("local-fit proxy network must map " + std::to_string(dim()) +
                     " features to one output");
  }
  if (proxy.kind == ProxyKind::DecisionTree && proxy.tree.dim() > dim()) {
    throw ShapeError("local-fit proxy tree references a feature beyond the model width");
  }
  if (proxy.kind == ProxyKind::Constant &&
      !(proxy.constant_score >= 0.0 && proxy.constant_score <= 1.0)) {
    throw ParameterError("constant proxy score must be in [0, 1]");
  }
}

void LocalFitConfig::validate() const {
  noise.validate();
  if (k == 0) throw ConfigError("localfit: k must be >= 1");
  if (!(accuracy_threshold >= 0.0 && accuracy_threshold <= 1.0)) {
    throw ConfigError("localfit: accuracy_threshold must be in [0, 1]");
  }
  if (!(decision_cutoff > 0.0 && decision_cutoff < 1.0)) {
    throw ConfigError("localfit: decision_cutoff must be in (0, 1)");
  }
  if (proxy == ProxyKind::Constant) {
    throw ConfigError("localfit: the constant proxy cannot be requested, only produced");
  }
  proxy_train.validate();
}

std::vector<std::size_t> default_proxy_dims(std::size_t d) {
  const std::size_t hidden = std::max<std::size_t>(8, 2 * d);
  return {d, hidden, hidden, 1};
}

LocalFitFit fit_localfit(const Matrix& train, std::span<const int> train_true,
                         std::span<const int> train_pred, const LocalFitConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw EmptyInputError("fit_localfit: empty training set");
  if (train_true.size() != train.rows() || train_pred.size() != train.rows()) {
    throw ShapeError("fit_localfit: labels and predictions must have one entry per row");
  }
  if (cfg.k > train.rows()) {
    throw ConfigError("localfit: k = " + std::to_string(cfg.k) + " exceeds the " +
                      std::to_string(train.rows()) + " training rows");
  }

  LocalFitFit fit;
  LocalFitModel& model = fit.model;
  model.scaler = data::MinMaxScaler::fit(train, &fit.warnings);
  model.k = cfg.k;
  model.accuracy_threshold = cfg.accuracy_threshold;
  model.decision_cutoff = cfg.decision_cutoff;

  const neighbors::NeighborIndex index(model.scaler.transform(train));
  SyntheticPoints synth = generate_synthetic(index.points(), cfg.noise);
  fit.warnings.insert(fit.warnings.end(), synth.warnings.begin(), synth.warnings.end());
  const SyntheticLabels labeled = label_synthetic(synth.points, index, train_true, train_pred,
                                                  cfg.k, cfg.accuracy_threshold);
  fit.synthetic_rows = synth.points.rows();
  const auto positives = static_cast<std::size_t>(
      std::count(labeled.labels.begin(), labeled.labels.end(), 1));
  fit.reliable_fraction =
      static_cast<double>(positives) / static_cast<double>(fit.synthetic_rows);

  if (positives == 0 || positives == fit.synthetic_rows) {
    model.proxy.kind = ProxyKind::Constant;
    model.proxy.constant_score = positives == 0 ? 0.0 : 1.0;
    fit.degenerate = true;
    fit.proxy_train_accuracy = 1.0;
    fit.warnings.push_back(std::string("every synthetic point is labeled ") +
                           (positives == 0 ? "unreliable" : "reliable") +
                           "; the proxy is a constant model");
    return fit;
  }

  if (cfg.proxy == ProxyKind::Mlp) {
    const auto dims = default_proxy_dims(train.cols());
    const std::vector<nn::Activation> acts{nn::Activation::ReLU, nn::Activation::ReLU,
                                           nn::Activation::Sigmoid};
    Matrix targets(labeled.labels.size(), 1);
    for (std::size_t i = 0; i < labeled.labels.size(); ++i) targets(i, 0) = labeled.labels[i];
    auto net = nn::NetworkModel::glorot(dims, acts, cfg.proxy_train.seed);
    auto trained = nn::train(std::move(net), synth.points, targets, cfg.proxy_train,
                             nn::Loss::BinaryCrossEntropy);
    model.proxy.kind = ProxyKind::Mlp;
    model.proxy.network = std::move(trained.model);
  } else {
    std::vector<std::size_t> sample(synth.points.rows());
    for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
    std::mt19937_64 rng(cfg.proxy_train.seed);
    model.proxy.kind = ProxyKind::DecisionTree;
    model.proxy.tree = forest::fit_tree(synth.points, labeled.labels, sample, cfg.tree, rng);
  }

  std::size_t agree = 0;
  for (std::size_t i = 0; i < synth.points.rows(); ++i) {
    const bool reliable = model.proxy.score(synth.points.row(i)) >= model.decision_cutoff;
    agree += reliable == (labeled.labels[i] == 1);
  }
  fit.proxy_train_accuracy = static_cast<double>(agree) / static_cast<double>(fit.synthetic_rows);
  return fit;
}

LocalFitVerdict assess_localfit(const LocalFitModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ShapeError("local fit: input has " + std::to_string(x.size()) +
                     " features, model expects " + std::to_string(model.dim()));
  }
  const double score = model.proxy.score(model.scaler.transform(x));
  return {score, score >= model.decision_cutoff};
}

std::vector<LocalFitVerdict> assess_localfit_batch_serial(const LocalFitModel& model,
                                                          const Matrix& rows) {
  std::vector<LocalFitVerdict> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = assess_localfit(model, rows.row(r));
  return out;
}

std::vector<LocalFitVerdict> assess_localfit_batch(const LocalFitModel& model,
                                                   const Matrix& rows) {
  if (!rows.empty() && rows.cols() != model.dim()) {
    throw ShapeError("local fit: input has " + std::to_string(rows.cols()) +
                     " features, model expects " + std::to_string(model.dim()));
  }
  std::vector<LocalFitVerdict> out(rows.rows());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    out[i] = assess_localfit(model, rows.row(i));
  }
  return out;
}

}  // namespace relkit::localfit
