// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "irsnoma/beamforming.hpp"

namespace irsnoma {
namespace {

std::vector<CRowVectord> random_rows(int count, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::vector<CRowVectord> rows;
  for (int v = 0; v < count; ++v) {
    CRowVectord r(m);
    for (int j = 0; j < m; ++j) r(j) = cdouble(n(rng), n(rng));
    rows.push_back(r);
  }
  return rows;
}

TEST(NullSpace, OrthonormalAndAnnihilating) {
  std::mt19937_64 rng(1);
  const auto rows = random_rows(3, 7, rng);
  CMatrixd m(3, 7);
  for (int i = 0; i < 3; ++i) m.row(i) = rows[i];
  const CMatrixd q = null_space(m);
  ASSERT_EQ(q.cols(), 4);
  EXPECT_NEAR((q.adjoint() * q - CMatrixd::Identity(4, 4)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((m * q).norm(), 0.0, 1e-12);
}

TEST(ZeroForcing, NullsOtherClusters) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = random_rows(5, 8, rng);
    const BeamformerSet set = build_zf_beamformers(rows);
    for (int i = 0; i < 5; ++i) {
      EXPECT_NEAR(set.beams[i].norm(), 1.0, 1e-12);
      EXPECT_GT(std::abs((rows[i] * set.beams[i])(0)), 1e-6);
      for (int j = 0; j < 5; ++j) {
        if (j != i) EXPECT_LT(std::abs((rows[j] * set.beams[i])(0)), 1e-9);
      }
    }
  }
}

TEST(ZeroForcing, BeamIsNormalizedProjection) {
  // f_i is the component of u_i^H orthogonal to the other rows.
  std::mt19937_64 rng(3);
  const auto rows = random_rows(2, 4, rng);
  const BeamformerSet set = build_zf_beamformers(rows);
  const CVectord other = rows[1].adjoint();
  CVectord proj = rows[0].adjoint();
  proj -= other * (other.dot(proj) / other.squaredNorm());
  proj.normalize();
  const cdouble phase = proj.dot(set.beams[0]);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
}

TEST(ZeroForcing, SingleClusterIsMatchedFilter) {
  std::mt19937_64 rng(4);
  const auto rows = random_rows(1, 4, rng);
  const BeamformerSet set = build_zf_beamformers(rows);
  EXPECT_NEAR(std::abs((rows[0] * set.beams[0])(0)), rows[0].norm(), 1e-12);
}

TEST(ZeroForcing, FailsWithoutDegreesOfFreedom) {
  std::mt19937_64 rng(5);
  auto rows = random_rows(3, 2, rng);
  EXPECT_THROW(build_zf_beamformers(rows), ZeroForcingError);
  rows = random_rows(2, 3, rng);
  rows.push_back(rows[0] * cdouble(0.5, 1.0));
  try {
    build_zf_beamformers(rows);
    FAIL();
  } catch (const ZeroForcingError& e) {
    EXPECT_GE(e.cluster(), 0);
  }
  EXPECT_THROW(build_zf_beamformers({}), std::invalid_argument);
}

}  // namespace
}  // namespace irsnoma
