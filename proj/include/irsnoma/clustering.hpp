// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include "irsnoma/linalg.hpp"

namespace irsnoma {

/// Users grouped onto shared beams. Each cluster lists user indices weakest
/// first (ascending ||u||^2), which is also the SIC decode order.
struct ClusterPlan {
  std::vector<std::vector<int>> clusters;
  std::vector<int> leftover;

  int num_clusters() const { return static_cast<int>(clusters.size()); }
};

/// |u_x^H u_y| / (||u_x|| ||u_y||), in [0, 1].
template <typename DerivedX, typename DerivedY>
typename DerivedX::RealScalar correlation(const Eigen::MatrixBase<DerivedX>& ux, const Eigen::MatrixBase<DerivedY>& uy) {
  using Real = typename DerivedX::RealScalar;
  const Real nx = ux.norm();
  const Real ny = uy.norm();
  if (nx == Real(0) || ny == Real(0)) throw std::invalid_argument("correlation: zero channel vector");
  if (ux.size() != uy.size()) throw std::invalid_argument("correlation: length mismatch");
  // Works for rows or columns: sum_m conj(x_m) y_m.
  const auto inner = (ux.reshaped().conjugate().array() * uy.reshaped().array()).sum();
  return std::min(Real(1), std::abs(inner) / (nx * ny));
}

/// Upper-triangular gain-difference matrix: D(x, y) = ||u_x||^2 - ||u_y||^2 when
/// the pair correlation exceeds `threshold`, zero otherwise (and on/below the diagonal).
Eigen::MatrixXd build_difference_matrix(const std::vector<CRowVectord>& channels, double threshold);

/// Greedy pairing on |D|. When no eligible pair remains the threshold is relaxed
/// in 0.05 steps; random grouping is the last resort. Ties go to the lowest (x, y).
ClusterPlan form_clusters(const Eigen::MatrixXd& difference, const std::vector<CRowVectord>& channels,
                          int users_per_cluster, int num_clusters, double threshold, std::mt19937_64& rng);

/// Full correlation-gated clustering of all users.
ClusterPlan cluster_users(const std::vector<CRowVectord>& channels, int users_per_cluster, int num_clusters,
                          double threshold, std::mt19937_64& rng);

/// Uniformly random grouping, used as the clustering baseline.
ClusterPlan random_clusters(const std::vector<CRowVectord>& channels, int users_per_cluster, int num_clusters,
                            std::mt19937_64& rng);

/// Sorts each cluster weakest first.
void sort_by_gain(ClusterPlan& plan, const std::vector<CRowVectord>& channels);

}  // namespace irsnoma
