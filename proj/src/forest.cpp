#include "relkit/forest.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "relkit/random.hpp"

namespace relkit::forest {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child Gini, lower is better
};

double gini(std::size_t pos, std::size_t n) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(n);
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, const TreeConfig& cfg,
              std::mt19937_64& rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<std::size_t> sample) {
    grow(sample, 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, int depth) {
    const std::size_t n = rows.size();
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += y_[r] == 1;
    const int id = static_cast<int>(nodes_.size());
    TreeNode node;
    node.samples = n;
    node.probability = static_cast<double>(pos) / static_cast<double>(n);
    nodes_.push_back(node);

    const bool pure = pos == 0 || pos == n;
    if (pure || depth >= cfg_.max_depth || n < cfg_.min_samples_split ||
        n < 2 * std::max<std::size_t>(1, cfg_.min_samples_leaf)) {
      return id;
    }
    const Split best = find_split(rows, pos);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[static_cast<std::size_t>(id)].feature = best.feature;
    nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (cfg_.max_features > 0 && cfg_.max_features < features.size()) {
      std::shuffle(features.begin(), features.end(), rng_);
      features.resize(cfg_.max_features);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  Split find_split(const std::vector<std::size_t>& rows, std::size_t total_pos) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(1, cfg_.min_samples_leaf);
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> column(n);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) column[i] = {x_(rows[i], f), y_[rows[i]]};
      std::sort(column.begin(), column.end());
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += column[i].second == 1;
        const std::size_t n_left = i + 1;
        if (column[i].first == column[i + 1].first) continue;
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const double impurity =
            (static_cast<double>(n_left) * gini(left_pos, n_left) +
             static_cast<double>(n - n_left) * gini(total_pos - left_pos, n - n_left)) /
            static_cast<double>(n);
        if (impurity < best.impurity) {
          const double a = column[i].first;
          const double b = column[i + 1].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {static_cast<int>(f), mid, impurity};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  const TreeConfig& cfg_;
  std::mt19937_64& rng_;
  std::vector<TreeNode> nodes_;
};

DecisionTree fit_one(const Matrix& x, std::span<const int> y, const ForestConfig& cfg,
                     std::size_t tree_index) {
  std::mt19937_64 rng(derive_seed(cfg.seed, {tree_index}));
  std::vector<std::size_t> sample(x.rows());
  if (cfg.bootstrap) {
    std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
    for (auto& s : sample) s = pick(rng);
  } else {
    std::iota(sample.begin(), sample.end(), std::size_t{0});
  }
  return fit_tree(x, y, sample, cfg.tree, rng);
}

void check_forest_input(const Matrix& x, std::span<const int> y, const ForestConfig& cfg) {
  if (cfg.n_trees < 1) throw ConfigError("random forest needs at least one tree");
  if (x.rows() != y.size()) throw ShapeError("random forest: label count differs from row count");
  std::size_t pos = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw FitError("random forest: labels must be 0 or 1");
    pos += label == 1;
  }
  if (pos < 2 || y.size() - pos < 2) {
    throw FitError("random forest: need at least 2 samples of each class");
  }
}

}  // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ShapeError("decision tree has no nodes");
  const int n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (!(node.probability >= 0.0 && node.probability <= 1.0)) {
      throw ParameterError("tree node probability outside [0, 1]");
    }
    if (node.is_leaf()) continue;
    if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n) {
      throw ShapeError("tree node child index out of range");
    }
    dim_ = std::max(dim_, static_cast<std::size_t>(node.feature) + 1);
  }
}

double DecisionTree::predict_proba(std::span<const double> x) const {
  if (x.size() < dim_) {
    throw ShapeError("tree expects at least " + std::to_string(dim_) + " features");
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes_[i].probability;
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    deepest = std::max(deepest, depth[i]);
    if (!node.is_leaf()) {
      depth[static_cast<std::size_t>(node.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(node.right)] = depth[i] + 1;
    }
  }
  return deepest;
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y,
                      std::span<const std::size_t> sample, const TreeConfig& cfg,
                      std::mt19937_64& rng) {
  if (sample.empty()) throw EmptyInputError("fit_tree: empty sample");
  if (x.rows() != y.size()) throw ShapeError("fit_tree: label count differs from row count");
  TreeBuilder builder(x, y, cfg, rng);
  return DecisionTree(builder.build({sample.begin(), sample.end()}));
}

RandomForest rf_fit_serial(const Matrix& x, std::span<const int> y, const ForestConfig& cfg) {
  check_forest_input(x, y, cfg);
  RandomForest rf;
  rf.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  for (std::size_t t = 0; t < rf.trees.size(); ++t) rf.trees[t] = fit_one(x, y, cfg, t);
  return rf;
}

RandomForest rf_fit(const Matrix& x, std::span<const int> y, const ForestConfig& cfg) {
  check_forest_input(x, y, cfg);
  RandomForest rf;
  rf.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  const auto n = static_cast<std::ptrdiff_t>(rf.trees.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    rf.trees[static_cast<std::size_t>(t)] = fit_one(x, y, cfg, static_cast<std::size_t>(t));
  }
  return rf;
}

Prediction rf_predict(const RandomForest& rf, std::span<const double> x) {
  if (rf.trees.empty()) throw ParameterError("random forest has no trees");
  double sum = 0.0;
  for (const auto& tree : rf.trees) sum += tree.predict_proba(x);
  const double p = sum / static_cast<double>(rf.trees.size());
  return {p > 0.5 ? 1 : 0, p};
}

}  // namespace relkit::forest
