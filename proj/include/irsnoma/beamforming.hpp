// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "irsnoma/linalg.hpp"

namespace irsnoma {

/// Thrown when a cluster has no zero-forcing direction left.
class ZeroForcingError : public std::runtime_error {
 public:
  ZeroForcingError(int cluster, const std::string& what)
      : std::runtime_error("zero-forcing failed for cluster " + std::to_string(cluster) + ": " + what),
        cluster_(cluster) {}

  int cluster() const { return cluster_; }

 private:
  int cluster_;
};

struct BeamformerSet {
  std::vector<CVectord> beams;  // f_i, unit norm, M x 1
  std::vector<CMatrixd> bases;  // Q_i, M x r orthonormal basis of null(U_i^H)

  int num_clusters() const { return static_cast<int>(beams.size()); }
};

/// Orthonormal basis of the null space of `m` (rank cut at max(rows, cols) * eps * sigma_max).
CMatrixd null_space(const CMatrixd& m);

/// One beam per cluster from the strongest-user rows: f_i is the projection of
/// u_i^H onto the complement of the other rows, normalized to unit norm. A single
/// cluster gets the matched filter.
BeamformerSet build_zf_beamformers(const std::vector<CRowVectord>& strongest);

}  // namespace irsnoma
