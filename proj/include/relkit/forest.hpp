#pragma once

// CART-style binary classification trees with Gini splits, and a bagged
// forest of them. Serves as the reference black-box classifier in the
// simulated experiment and as an optional local-fit proxy.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "relkit/matrix.hpp"

namespace relkit::forest {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double probability = 0.0;  // positive-class fraction at this node
  std::size_t samples = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct TreeConfig {
  int max_depth = 12;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0 = consider every feature
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  // Positive-class probability of the leaf reached by `x`.
  double predict_proba(std::span<const double> x) const;
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  int depth() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t dim_ = 0;
};

// Fits on the rows listed in `sample` (duplicates allowed, as produced by
// bootstrapping). `rng` drives feature subsampling only.
DecisionTree fit_tree(const Matrix& x, std::span<const int> y,
                      std::span<const std::size_t> sample, const TreeConfig& cfg,
                      std::mt19937_64& rng);

struct ForestConfig {
  int n_trees = 100;
  TreeConfig tree;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
};

struct Prediction {
  int label = 0;             // 1 when probability > 0.5
  double probability = 0.0;  // mean of per-tree leaf probabilities
};

// Each tree draws from its own seed stream derived from (seed, tree index).
RandomForest rf_fit_serial(const Matrix& x, std::span<const int> y, const ForestConfig& cfg);
// Trees are fitted in parallel; bit-identical to rf_fit_serial.
RandomForest rf_fit(const Matrix& x, std::span<const int> y, const ForestConfig& cfg);

Prediction rf_predict(const RandomForest& rf, std::span<const double> x);

}  // namespace relkit::forest
