// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/beamforming.hpp"

#include <algorithm>
#include <limits>

namespace irsnoma {

CMatrixd null_space(const CMatrixd& m) {
  const Eigen::Index cols = m.cols();
  if (m.rows() == 0) return CMatrixd::Identity(cols, cols);
  Eigen::JacobiSVD<CMatrixd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = double(std::max(m.rows(), cols)) * std::numeric_limits<double>::epsilon() *
                     (s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

BeamformerSet build_zf_beamformers(const std::vector<CRowVectord>& strongest) {
  const int clusters = static_cast<int>(strongest.size());
  if (clusters == 0) throw std::invalid_argument("build_zf_beamformers: no clusters");
  const Eigen::Index m = strongest.front().size();
  for (const auto& u : strongest) {
    if (u.size() != m) throw std::invalid_argument("build_zf_beamformers: channel length mismatch");
  }

  BeamformerSet set;
  for (int i = 0; i < clusters; ++i) {
    // Rows of `others` are u_j for j != i, i.e. U_i^H.
    CMatrixd others(clusters - 1, m);
    for (int j = 0, r = 0; j < clusters; ++j) {
      if (j != i) others.row(r++) = strongest[j];
    }
    CMatrixd q = null_space(others);
    if (q.cols() == 0) throw ZeroForcingError(i, "null space of the other clusters' channels is empty");
    CVectord f = q * (q.adjoint() * strongest[i].adjoint());
    const double norm = f.norm();
    if (!(norm > std::numeric_limits<double>::epsilon() * strongest[i].norm())) {
      throw ZeroForcingError(i, "own channel lies in the span of the other clusters' channels");
    }
    set.beams.push_back(f / norm);
    set.bases.push_back(std::move(q));
  }
  return set;
}

}  // namespace irsnoma
