#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relkit/matrix.hpp"

namespace relkit::neighbors {

struct Neighbor {
  std::size_t id = 0;
  double distance = 0.0;
  bool operator==(const Neighbor&) const = default;
};

// Exact Euclidean k-nearest-neighbor search by full scan. Row ids are the
// row positions 0..n-1 of the indexed matrix. Results are ordered by
// (distance, id), so equal distances resolve to the smaller id.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(Matrix points);

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dim() const noexcept { return points_.cols(); }
  const Matrix& points() const noexcept { return points_; }

  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

 private:
  void check(std::span<const double> query, std::size_t k) const;

  Matrix points_;
};

// One knn() call per query row, in row order.
std::vector<std::vector<Neighbor>> knn_batch_serial(const NeighborIndex& index,
                                                    const Matrix& queries,
                                                    std::size_t k);

// OpenMP-parallel over queries; identical output to knn_batch_serial.
std::vector<std::vector<Neighbor>> knn_batch(const NeighborIndex& index,
                                             const Matrix& queries,
                                             std::size_t k);

}  // namespace relkit::neighbors
