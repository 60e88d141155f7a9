// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "irsnoma/beamforming.hpp"
#include "irsnoma/clustering.hpp"
#include "irsnoma/opac.hpp"

namespace irsnoma {
namespace {

TEST(ScaBound, TightAtAnchorAndBelowElsewhere) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> log_gamma(-4.0, 6.0);
  for (int i = 0; i < 1000; ++i) {
    const double g0 = std::pow(10.0, log_gamma(rng));
    const double g = std::pow(10.0, log_gamma(rng));
    const auto s = sca_bound(g0);
    EXPECT_NEAR(s(g0), std::log2(1.0 + g0), 1e-12);
    EXPECT_LE(s(g), std::log2(1.0 + g) + 1e-12);
  }
  EXPECT_THROW(sca_bound(0.0), std::invalid_argument);
  EXPECT_NEAR(sca_bound(1.0f).zeta, 0.5f, 1e-7f);
}

ClusterModel two_user_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ClusterModel m;
  m.gain = Eigen::Vector2d(1e-10 * (0.5 + u(rng)), 1e-9 * (0.5 + u(rng)));
  m.noise = Eigen::Vector2d(4e-12 * (0.5 + u(rng)), 4e-15 * (0.5 + u(rng)));
  m.beam_norm_sq = 1.0;
  m.power = 1.0;
  m.power_cap = 1.0;
  m.circuit_power = 1.0;
  m.bandwidth = 1.0;
  m.min_sinr = 0.5;
  m.sic_gap = 1e-13;
  return m;
}

// Lagrangian of the surrogate problem written out directly for K users.
double lagrangian(const ClusterModel& m, const Eigen::VectorXd& zeta, double rho, const PacDuals& d,
                  const Eigen::VectorXd& beta) {
  const int k_count = m.size();
  double value = 0.0;
  for (int k = 0; k < k_count; ++k) {
    double stronger = 0.0;
    for (int j = k + 1; j < k_count; ++j) stronger += beta(j);
    const double a = m.power * m.gain(k);
    value += m.bandwidth * zeta(k) * std::log2(a * beta(k) / (a * stronger + m.noise(k)));
    value += d.phi(k) * (a * beta(k) - m.min_sinr * (a * stronger + m.noise(k)));
    if (k + 1 < k_count) {
      value += d.upsilon(k) * (m.beam_norm_sq * m.power * m.gain(k + 1) * (beta(k) - stronger) - m.sic_gap);
    }
  }
  const double tx = m.beam_norm_sq * m.power * beta.sum();
  return value - rho * tx + d.alpha * (m.power_cap - tx);
}

PacDuals random_duals(std::mt19937_64& rng, int k_count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PacDuals d;
  d.alpha = 0.2 * u(rng);
  d.phi = Eigen::VectorXd(k_count);
  d.upsilon = Eigen::VectorXd::Zero(k_count);
  for (int k = 0; k < k_count; ++k) d.phi(k) = 1e8 * u(rng);
  for (int k = 0; k + 1 < k_count; ++k) d.upsilon(k) = 1e8 * u(rng);
  return d;
}

TEST(ClosedForm, SolvesStationarity) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const ClusterModel m = two_user_model(rng);
    const Eigen::Vector2d zeta(sca_bound(3.0).zeta, sca_bound(300.0).zeta);
    const PacDuals d = random_duals(rng, 2);
    const double rho = 5.0;
    const PacSolution sol = solve_pac(m, zeta, rho, d, Eigen::Vector2d(0.3, 0.1));
    ASSERT_FALSE(sol.dual_infeasible);
    const double box = m.power_cap / (m.beam_norm_sq * m.power);
    for (int k = 0; k < 2; ++k) {
      if (sol.beta(k) <= 0.0 || sol.beta(k) >= box) continue;
      // Central difference of the independent Lagrangian vanishes at the fixed point.
      const double h = 1e-7 * sol.beta(k);
      Eigen::VectorXd up = sol.beta, dn = sol.beta;
      up(k) += h;
      dn(k) -= h;
      const double grad = (lagrangian(m, zeta, rho, d, up) - lagrangian(m, zeta, rho, d, dn)) / (2 * h);
      const double scale = m.bandwidth * zeta(k) / (std::numbers::ln2 * sol.beta(k));
      EXPECT_LT(std::abs(grad), 1e-5 * scale) << "trial " << trial << " user " << k;
    }
  }
}

TEST(Constraints, AffineAndConsistentWithFeasibility) {
  std::mt19937_64 rng(3);
  const ClusterModel m = two_user_model(rng);
  const Eigen::Vector2d a(0.6, 0.1), b(0.2, 0.3);
  const Eigen::VectorXd mid = constraint_values(m, 0.5 * (a + b));
  const Eigen::VectorXd avg = 0.5 * (constraint_values(m, a) + constraint_values(m, b));
  EXPECT_LT((mid - avg).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + avg.cwiseAbs().maxCoeff()));

  const Eigen::VectorXd floor = minimal_power_point(m);
  EXPECT_TRUE(satisfies_constraints(m, floor));
  const Eigen::VectorXd g = cluster_sinr(m, floor);
  EXPECT_NEAR(g(0), m.min_sinr, 1e-6 * m.min_sinr);
  // Repair pulls an infeasible target back onto the feasible segment.
  const Eigen::VectorXd fixed = repair(m, Eigen::Vector2d(0.01, 0.9), floor);
  EXPECT_TRUE(satisfies_constraints(m, fixed));
}

TEST(ClusterRate, SurrogateIsLowerBoundTightAtAnchor) {
  std::mt19937_64 rng(4);
  const ClusterModel m = two_user_model(rng);
  const Eigen::Vector2d anchor(0.7, 0.2);
  const Eigen::VectorXd g0 = cluster_sinr(m, anchor);
  const std::vector<ScaCoefficients<double>> sca{sca_bound(g0(0)), sca_bound(g0(1))};
  EXPECT_NEAR(surrogate_rate(m, sca, anchor), cluster_rate(m, anchor), 1e-10);
  EXPECT_LE(surrogate_rate(m, sca, Eigen::Vector2d(0.4, 0.5)), cluster_rate(m, Eigen::Vector2d(0.4, 0.5)) + 1e-12);
}

TEST(Dinkelbach, MonotoneAndConverged) {
  SystemConfig c;
  for (int t = 0; t < 10; ++t) {
    std::mt19937_64 rng(50 + t);
    const ChannelSet set = synthesize_channels(c, draw_geometry(c, rng), rng);
    const auto u = effective_channels(set, CVectord::Ones(c.num_irs_elements));
    const ClusterPlan plan = cluster_users(u, 2, 5, c.correlation_threshold, rng);
    std::vector<CRowVectord> strongest;
    std::vector<std::vector<CRowVectord>> users;
    for (const auto& cl : plan.clusters) {
      strongest.push_back(u[cl.back()]);
      users.push_back({u[cl[0]], u[cl[1]]});
    }
    const LinkGains links = link_gains(users, build_zf_beamformers(strongest).beams);
    const Stage1State st = dinkelbach_outer(links, c);
    ASSERT_GT(st.sinr_target, 0.0);
    for (std::size_t l = 1; l < st.trace.size(); ++l) {
      for (Eigen::Index i = 0; i < st.trace[l].rho.size(); ++i) {
        EXPECT_GE(st.trace[l].rho(i), st.trace[l - 1].rho(i) - 1e-9 * std::abs(st.trace[l - 1].rho(i)));
      }
    }
    EXPECT_TRUE(st.converged);
    EXPECT_LE(std::abs(st.residual), c.opac.tolerance);
    SystemConfig enforced = c;
    enforced.min_sinr = st.sinr_target;
    EXPECT_TRUE(evaluate_system(links, st.beta, enforced).feasible());
  }
}

}  // namespace
}  // namespace irsnoma
