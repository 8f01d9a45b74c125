#include "relkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "relkit/errors.hpp"

namespace relkit::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": lengths " + std::to_string(a) + " and " +
                     std::to_string(b) + " differ");
  }
}

void check_binary(std::span<const int> y) {
  for (int v : y) {
    if (v != 0 && v != 1) throw ParameterError("labels must be 0 or 1");
  }
}

void check_scores(std::span<const double> s) {
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("scores must be finite and in [0, 1]");
  }
}

// Indices sorted by descending score.
std::vector<std::size_t> by_score_desc(std::span<const double> score) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return idx;
}

}  // namespace

MetricValue operator-(const MetricValue& a, const MetricValue& b) {
  if (!a.defined || !b.defined) return MetricValue::undefined();
  return MetricValue::of(a.value - b.value);
}

double accuracy_score(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true.size(), y_pred.size(), "accuracy_score");
  if (y_true.empty()) throw EmptyInputError("accuracy_score: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true.size(), y_pred.size(), "confusion");
  check_binary(y_true);
  check_binary(y_pred);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      (y_pred[i] == 1 ? cm.tp : cm.fn)++;
    } else {
      (y_pred[i] == 1 ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

MetricValue roc_auc(std::span<const int> y_true, std::span<const double> y_score) {
  check_lengths(y_true.size(), y_score.size(), "roc_auc");
  check_binary(y_true);
  check_scores(y_score);
  const auto pos = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) return MetricValue::undefined();

  // Twice the trapezoid area in (FP count, TP count) units, kept integral.
  const auto idx = by_score_desc(y_score);
  std::size_t tp = 0;
  std::size_t fp = 0;
  unsigned long long area2 = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = y_score[idx[i]];
    const std::size_t tp0 = tp;
    const std::size_t fp0 = fp;
    for (; i < idx.size() && y_score[idx[i]] == s; ++i) (y_true[idx[i]] == 1 ? tp : fp)++;
    area2 += static_cast<unsigned long long>(fp - fp0) * (tp + tp0);
  }
  return MetricValue::of(static_cast<double>(area2) /
                         (2.0 * static_cast<double>(pos) * static_cast<double>(neg)));
}

MetricValue pr_auc(std::span<const int> y_true, std::span<const double> y_score) {
  check_lengths(y_true.size(), y_score.size(), "pr_auc");
  check_binary(y_true);
  check_scores(y_score);
  const auto pos = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
  if (pos == 0) return MetricValue::undefined();

  const auto idx = by_score_desc(y_score);
  std::size_t tp = 0;
  std::size_t fp = 0;
  double prev_recall = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = y_score[idx[i]];
    for (; i < idx.size() && y_score[idx[i]] == s; ++i) (y_true[idx[i]] == 1 ? tp : fp)++;
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return MetricValue::of(area);
}

MetricValue brier_score(std::span<const int> y_true, std::span<const double> y_score) {
  check_lengths(y_true.size(), y_score.size(), "brier_score");
  check_binary(y_true);
  check_scores(y_score);
  if (y_true.empty()) return MetricValue::undefined();
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double diff = y_score[i] - static_cast<double>(y_true[i]);
    sum += diff * diff;
  }
  return MetricValue::of(sum / static_cast<double>(y_true.size()));
}

MetricsReport compute_all(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const double> y_score) {
  check_lengths(y_true.size(), y_pred.size(), "compute_all");
  check_lengths(y_true.size(), y_score.size(), "compute_all");
  MetricsReport r;
  r.support = y_true.size();
  if (y_true.empty()) return r;

  const ConfusionMatrix cm = confusion(y_true, y_pred);
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);

  if (cm.tp + cm.fp > 0) r.precision = MetricValue::of(tp / (tp + fp));
  if (cm.tp + cm.fn > 0) r.recall = MetricValue::of(tp / (tp + fn));
  if (cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0) {
    r.balanced_accuracy = MetricValue::of((tp / (tp + fn) + tn / (tn + fp)) / 2.0);
  }
  if (2 * cm.tp + cm.fp + cm.fn > 0) r.f1 = MetricValue::of(2.0 * tp / (2.0 * tp + fp + fn));
  const double margins = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (margins > 0.0) r.mcc = MetricValue::of((tp * tn - fp * fn) / std::sqrt(margins));
  r.auc = roc_auc(y_true, y_score);
  r.prc = pr_auc(y_true, y_score);
  r.brier = brier_score(y_true, y_score);
  return r;
}

MetricDeltas delta_report(const MetricsReport& reliable, const MetricsReport& unreliable) {
  MetricDeltas d;
  d.balanced_accuracy = reliable.balanced_accuracy - unreliable.balanced_accuracy;
  d.precision = reliable.precision - unreliable.precision;
  d.recall = reliable.recall - unreliable.recall;
  d.auc = reliable.auc - unreliable.auc;
  d.f1 = reliable.f1 - unreliable.f1;
  d.mcc = reliable.mcc - unreliable.mcc;
  d.prc = reliable.prc - unreliable.prc;
  d.brier = reliable.brier - unreliable.brier;
  return d;
}

std::vector<std::pair<std::string_view, MetricValue>> named_values(const MetricsReport& r) {
  return {{"balanced_accuracy", r.balanced_accuracy}, {"precision", r.precision},
          {"recall", r.recall}, {"auc", r.auc}, {"f1", r.f1}, {"mcc", r.mcc},
          {"prc", r.prc}, {"brier", r.brier}};
}

std::vector<std::pair<std::string_view, MetricValue>> named_values(const MetricDeltas& d) {
  return {{"balanced_accuracy", d.balanced_accuracy}, {"precision", d.precision},
          {"recall", d.recall}, {"auc", d.auc}, {"f1", d.f1}, {"mcc", d.mcc},
          {"prc", d.prc}, {"brier", d.brier}};
}

}  // namespace relkit::metrics
