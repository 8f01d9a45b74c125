#include "relkit/reliability.hpp"

#include <string>

namespace relkit {

namespace {

RowVerdict combine(const density::DensityVerdict& d, const localfit::LocalFitVerdict& l) {
  return {d, l, d.reliable && l.reliable};
}

}  // namespace

std::vector<RowVerdict> assess_rows_serial(const density::DensityModel& density,
                                           const localfit::LocalFitModel& localfit,
                                           const Matrix& rows) {
  std::vector<RowVerdict> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    out[r] = combine(density::assess_density(density, rows.row(r)),
                     localfit::assess_localfit(localfit, rows.row(r)));
  }
  return out;
}

std::vector<RowVerdict> assess_rows(const density::DensityModel& density,
                                    const localfit::LocalFitModel& localfit,
                                    const Matrix& rows) {
  if (!rows.empty() && (rows.cols() != density.dim() || rows.cols() != localfit.dim())) {
    throw ShapeError("assess: input has " + std::to_string(rows.cols()) +
                     " features, models expect " + std::to_string(density.dim()));
  }
  std::vector<RowVerdict> out(rows.rows());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    out[i] = combine(density::assess_density(density, rows.row(i)),
                     localfit::assess_localfit(localfit, rows.row(i)));
  }
  return out;
}

SubsetEvaluation evaluate_subsets(std::span<const int> y_true, std::span<const int> y_pred,
                                  std::span<const double> y_score,
                                  std::span<const int> reliable_flags) {
  const std::size_t n = y_true.size();
  if (y_pred.size() != n || y_score.size() != n || reliable_flags.size() != n) {
    throw ShapeError("evaluate_subsets: column lengths differ");
  }
  std::vector<int> t[2], p[2];
  std::vector<double> s[2];
  for (std::size_t i = 0; i < n; ++i) {
    const int f = reliable_flags[i];
    if (f != 0 && f != 1) throw ParameterError("reliability flags must be 0 or 1");
    t[f].push_back(y_true[i]);
    p[f].push_back(y_pred[i]);
    s[f].push_back(y_score[i]);
  }
  SubsetEvaluation ev;
  ev.whole = metrics::compute_all(y_true, y_pred, y_score);
  ev.reliable = metrics::compute_all(t[1], p[1], s[1]);
  ev.unreliable = metrics::compute_all(t[0], p[0], s[0]);
  ev.delta = metrics::delta_report(ev.reliable, ev.unreliable);
  ev.n_reliable = t[1].size();
  ev.n_unreliable = t[0].size();
  return ev;
}

}  // namespace relkit
