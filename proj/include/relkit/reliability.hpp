#pragma once

// Combines the density and local-fit checks row by row and splits a
// labeled set into reliable / unreliable subsets for evaluation.

#include <cstddef>
#include <span>
#include <vector>

#include "relkit/density.hpp"
#include "relkit/localfit.hpp"
#include "relkit/metrics.hpp"

namespace relkit {

struct RowVerdict {
  density::DensityVerdict density;
  localfit::LocalFitVerdict localfit;
  bool reliable = false;  // density.reliable && localfit.reliable

  bool operator==(const RowVerdict&) const = default;
};

std::vector<RowVerdict> assess_rows_serial(const density::DensityModel& density,
                                           const localfit::LocalFitModel& localfit,
                                           const Matrix& rows);
// OpenMP-parallel over rows; output order equals input order.
std::vector<RowVerdict> assess_rows(const density::DensityModel& density,
                                    const localfit::LocalFitModel& localfit,
                                    const Matrix& rows);

struct SubsetEvaluation {
  metrics::MetricsReport whole;
  metrics::MetricsReport reliable;
  metrics::MetricsReport unreliable;
  metrics::MetricDeltas delta;  // reliable - unreliable
  std::size_t n_reliable = 0;
  std::size_t n_unreliable = 0;
};

SubsetEvaluation evaluate_subsets(std::span<const int> y_true, std::span<const int> y_pred,
                                  std::span<const double> y_score,
                                  std::span<const int> reliable_flags);

}  // namespace relkit
