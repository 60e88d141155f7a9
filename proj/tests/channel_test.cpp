// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numbers>

#include "irsnoma/channel.hpp"

namespace irsnoma {
namespace {

TEST(ArrayResponse, UnitModulusAndPhaseProgression) {
  const CVectord a = array_response(0.4, 16, 0.5);
  for (Eigen::Index e = 0; e < a.size(); ++e) EXPECT_NEAR(std::abs(a(e)), 1.0, 1e-12);
  const cdouble step = std::polar(1.0, -std::numbers::pi * std::sin(0.4));
  for (Eigen::Index e = 1; e < a.size(); ++e) EXPECT_NEAR(std::abs(a(e) - a(e - 1) * step), 0.0, 1e-12);
  // Broadside: all ones.
  EXPECT_NEAR((array_response(0.0, 8, 0.5) - CVectord::Ones(8)).norm(), 0.0, 1e-15);
  EXPECT_THROW(array_response(0.0, 0, 0.5), std::invalid_argument);
}

TEST(ArrayResponse, FloatInstantiation) {
  const CVector<float> a = array_response(0.3f, 4, 0.5f);
  EXPECT_NEAR(std::abs(a(3)), 1.0f, 1e-6f);
}

TEST(Pathloss, ReferenceAndDecay) {
  EXPECT_DOUBLE_EQ(pathloss_factor(1e-3, 1.0, 1.0, 2.2), 1e-3);
  EXPECT_NEAR(pathloss_factor(1e-3, 10.0, 1.0, 2.0), 1e-5, 1e-18);
}

TEST(Cascade, MatchesExplicitDiagonal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  CVectord h(5);
  CMatrixd g(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) h(i) = cdouble(n(rng), n(rng));
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = cdouble(n(rng), n(rng));
  const CMatrixd diag = h.conjugate().asDiagonal().toDenseMatrix();
  EXPECT_NEAR((cascade(h, g) - diag * g).norm(), 0.0, 1e-12);

  CVectord b(5);
  for (Eigen::Index i = 0; i < 5; ++i) b(i) = std::polar(1.0, n(rng));
  const CRowVectord u = effective_channel(cascade(h, g), b);
  EXPECT_NEAR((u - b.adjoint() * diag * g).norm(), 0.0, 1e-12);
  EXPECT_THROW(effective_channel(g, CVectord::Ones(4)), std::invalid_argument);
}

TEST(Geometry, UsersInsideDisc) {
  SystemConfig c;
  std::mt19937_64 rng(11);
  const UserGeometry g = draw_geometry(c, rng);
  ASSERT_EQ(static_cast<int>(g.irs_user_distance.size()), c.total_users);
  for (double d : g.irs_user_distance) {
    EXPECT_GT(d, 0.0);
    EXPECT_LE(d, c.user_radius);
  }
}

TEST(Channels, ShapesAndPowerScale) {
  SystemConfig c;
  c.num_irs_elements = 16;
  std::mt19937_64 rng(5);
  const ChannelSet set = synthesize_channels(c, draw_geometry(c, rng), rng);
  EXPECT_EQ(set.bs_irs.rows(), 16);
  EXPECT_EQ(set.bs_irs.cols(), c.num_bs_antennas);
  ASSERT_EQ(set.num_users(), c.total_users);
  // E|G_nm|^2 equals the BS-IRS path loss; the sample mean over N*M entries is close.
  const double pl = pathloss_factor(c.ref_pathloss, c.bs_irs_distance, c.ref_distance, c.pathloss_exp_bs_irs);
  const double mean = set.bs_irs.squaredNorm() / double(set.bs_irs.size());
  EXPECT_NEAR(mean / pl, 1.0, 0.5);
}

TEST(Channels, SeedReproducible) {
  SystemConfig c;
  std::mt19937_64 a(9), b(9);
  const ChannelSet x = synthesize_channels(c, draw_geometry(c, a), a);
  const ChannelSet y = synthesize_channels(c, draw_geometry(c, b), b);
  EXPECT_EQ((x.bs_irs - y.bs_irs).norm(), 0.0);
  EXPECT_EQ((x.cascaded.back() - y.cascaded.back()).norm(), 0.0);
}

// Two clusters, two users each, with gains chosen by hand.
LinkGains toy_links() {
  LinkGains l;
  l.gain.resize(2);
  l.gain[0].resize(2, 2);
  l.gain[0] << 1e-10, 2e-13, 4e-10, 0.0;
  l.gain[1].resize(2, 2);
  l.gain[1] << 3e-13, 2e-10, 0.0, 5e-10;
  l.channel_norm_sq = {Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(1.0, 3.0)};
  l.beam_norm_sq = Eigen::Vector2d::Ones();
  return l;
}

TEST(Metrics, SinrMatchesDirectFormula) {
  SystemConfig c;
  const LinkGains l = toy_links();
  Eigen::MatrixXd beta(2, 2);
  beta << 0.7, 0.2, 0.6, 0.3;
  const SystemMetrics m = evaluate_system(l, beta, c);
  const double p = c.cluster_power;
  const double s2 = c.noise_power;
  // Weak user of cluster 0: intra-cluster from the strong user plus cluster 1's beam.
  const double psi00 = p * 0.9 * 2e-13;
  EXPECT_NEAR(m.interference(0, 0), psi00, 1e-25);
  const double g00 = p * 0.7 * 1e-10 / (p * 0.2 * 1e-10 + psi00 + s2);
  EXPECT_NEAR(m.sinr(0, 0), g00, 1e-12 * g00);
  // Strong user of cluster 1 is zero-forced against cluster 0.
  EXPECT_NEAR(m.sinr(1, 1), p * 0.3 * 5e-10 / s2, 1e-9);
  const double rate0 = std::log2(1 + g00) + std::log2(1 + p * 0.2 * 4e-10 / s2);
  EXPECT_NEAR(m.rate(0), rate0, 1e-12 * rate0);
  EXPECT_NEAR(m.power(0), p * 0.9 + c.circuit_power, 1e-15);
  EXPECT_NEAR(m.far_user_interference, 0.5 * (psi00 + p * 0.9 * 3e-13), 1e-25);
}

TEST(Metrics, PowerAndQosFlags) {
  SystemConfig c;
  const LinkGains l = toy_links();
  Eigen::MatrixXd beta(2, 2);
  beta << 0.7, 0.2, 0.6, 0.3;
  c.min_sinr = 1e-3;
  EXPECT_TRUE(evaluate_system(l, beta, c).qos_met);
  c.min_sinr = 1e9;
  EXPECT_FALSE(evaluate_system(l, beta, c).qos_met);
  beta(0, 0) = 5.0;
  EXPECT_FALSE(evaluate_system(l, beta, SystemConfig{}).power_met);
}

}  // namespace
}  // namespace irsnoma
