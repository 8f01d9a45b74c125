#pragma once

// Binary classification metrics with explicit "undefined" results. The
// positive class is label 1 throughout.

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace relkit::metrics {

struct MetricValue {
  double value = 0.0;
  bool defined = false;

  static MetricValue of(double v) { return {v, true}; }
  static MetricValue undefined() { return {}; }
  bool operator==(const MetricValue&) const = default;
};

MetricValue operator-(const MetricValue& a, const MetricValue& b);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsReport {
  MetricValue balanced_accuracy;
  MetricValue precision;
  MetricValue recall;
  MetricValue auc;
  MetricValue f1;
  MetricValue mcc;
  MetricValue prc;  // area under the precision-recall curve
  MetricValue brier;
  std::size_t support = 0;

  bool operator==(const MetricsReport&) const = default;
};

// Per-metric (reliable - unreliable); undefined if either side is.
struct MetricDeltas {
  MetricValue balanced_accuracy;
  MetricValue precision;
  MetricValue recall;
  MetricValue auc;
  MetricValue f1;
  MetricValue mcc;
  MetricValue prc;
  MetricValue brier;

  bool operator==(const MetricDeltas&) const = default;
};

// Fraction of equal positions. Throws EmptyInputError / ShapeError.
double accuracy_score(std::span<const int> y_true, std::span<const int> y_pred);

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Trapezoidal area under the ROC curve; thresholds sweep the distinct
// scores, so tied scores form a single diagonal step. Undefined unless
// both classes are present.
MetricValue roc_auc(std::span<const int> y_true, std::span<const double> y_score);

// Area under the precision-recall curve with step-wise interpolation:
// sum over thresholds of (recall_i - recall_{i-1}) * precision_i.
// Undefined without positives.
MetricValue pr_auc(std::span<const int> y_true, std::span<const double> y_score);

MetricValue brier_score(std::span<const int> y_true, std::span<const double> y_score);

// Empty input yields a report with every metric undefined and support 0.
// Precision is undefined with no predicted positives, recall without
// actual positives, balanced accuracy unless both classes occur, F1 when
// 2TP + FP + FN = 0, MCC when any confusion-matrix margin is 0.
MetricsReport compute_all(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const double> y_score);

MetricDeltas delta_report(const MetricsReport& reliable, const MetricsReport& unreliable);

// Stable (name, value) listing in display order.
std::vector<std::pair<std::string_view, MetricValue>> named_values(const MetricsReport& r);
std::vector<std::pair<std::string_view, MetricValue>> named_values(const MetricDeltas& d);

}  // namespace relkit::metrics
