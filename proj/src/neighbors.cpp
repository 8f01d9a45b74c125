#include "relkit/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relkit::neighbors {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

}  // namespace

NeighborIndex::NeighborIndex(Matrix points) : points_(std::move(points)) {
  for (double v : points_.data()) {
    if (std::isnan(v)) throw ParameterError("neighbor index: NaN in points");
  }
}

void NeighborIndex::check(std::span<const double> query, std::size_t k) const {
  if (k == 0) throw ParameterError("knn: k must be at least 1");
  if (k > size()) {
    throw ParameterError("knn: k = " + std::to_string(k) + " exceeds the " +
                         std::to_string(size()) + " indexed points");
  }
  if (query.size() != dim()) {
    throw ShapeError("knn: query has " + std::to_string(query.size()) +
                     " values, index has " + std::to_string(dim()));
  }
}

std::vector<Neighbor> NeighborIndex::knn(std::span<const double> query,
                                         std::size_t k) const {
  check(query, k);
  std::vector<Neighbor> all(size());
  for (std::size_t r = 0; r < size(); ++r) {
    const auto row = points_.row(r);
    double d2 = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double diff = row[j] - query[j];
      d2 += diff * diff;
    }
    all[r] = {r, std::sqrt(d2)};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    closer);
  all.resize(k);
  return all;
}

std::vector<std::vector<Neighbor>> knn_batch_serial(const NeighborIndex& index,
                                                    const Matrix& queries,
                                                    std::size_t k) {
  std::vector<std::vector<Neighbor>> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) out[q] = index.knn(queries.row(q), k);
  return out;
}

std::vector<std::vector<Neighbor>> knn_batch(const NeighborIndex& index,
                                             const Matrix& queries,
                                             std::size_t k) {
  if (queries.rows() > 0) {
    // Validate once outside the parallel region so errors propagate.
    (void)index.knn(queries.row(0), k);
  }
  std::vector<std::vector<Neighbor>> out(queries.rows());
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    out[static_cast<std::size_t>(q)] = index.knn(queries.row(static_cast<std::size_t>(q)), k);
  }
  return out;
}

}  // namespace relkit::neighbors
