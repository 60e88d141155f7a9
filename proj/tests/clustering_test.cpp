// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "irsnoma/channel.hpp"
#include "irsnoma/clustering.hpp"

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

std::vector<CRowVectord> scenario_channels(const SystemConfig& c, std::mt19937_64& rng) {
  const ChannelSet set = synthesize_channels(c, draw_geometry(c, rng), rng);
  return effective_channels(set, CVectord::Ones(c.num_irs_elements));
}

TEST(Correlation, BoundsAndSymmetry) {
  std::mt19937_64 rng(1);
  const auto rows = random_rows(2, 6, rng);
  const double c = correlation(rows[0], rows[1]);
  EXPECT_GE(c, 0.0);
  EXPECT_LE(c, 1.0);
  EXPECT_DOUBLE_EQ(c, correlation(rows[1], rows[0]));
  EXPECT_NEAR(correlation(rows[0], CRowVectord(cdouble(0, 2) * rows[0])), 1.0, 1e-12);
  EXPECT_THROW(correlation(rows[0], CRowVectord::Zero(6)), std::invalid_argument);
}

TEST(DifferenceMatrix, ThresholdOneGivesZeros) {
  std::mt19937_64 rng(2);
  const auto rows = random_rows(8, 4, rng);
  EXPECT_EQ(build_difference_matrix(rows, 1.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DifferenceMatrix, GainDifferenceForCorrelatedPairs) {
  CRowVectord a(3), b(3), c(3);
  a << 1.0, 0.0, 0.0;
  b << 2.0, 0.1, 0.0;  // strongly aligned with a
  c << 0.0, 0.0, 3.0;  // orthogonal
  const Eigen::MatrixXd d = build_difference_matrix({a, b, c}, 0.7);
  EXPECT_NEAR(d(0, 1), a.squaredNorm() - b.squaredNorm(), 1e-12);
  EXPECT_EQ(d(0, 2), 0.0);
  EXPECT_EQ(d(1, 2), 0.0);
  EXPECT_EQ(d(1, 0), 0.0);  // upper triangular
}

TEST(FormClusters, DisjointAndSortedWeakestFirst) {
  SystemConfig c;
  std::mt19937_64 rng(4);
  const auto u = scenario_channels(c, rng);
  const ClusterPlan plan = cluster_users(u, 2, 5, 0.7, rng);
  ASSERT_EQ(plan.num_clusters(), 5);
  std::set<int> seen;
  for (const auto& cl : plan.clusters) {
    ASSERT_EQ(cl.size(), 2u);
    EXPECT_LE(u[cl[0]].squaredNorm(), u[cl[1]].squaredNorm());
    for (int x : cl) EXPECT_TRUE(seen.insert(x).second);
  }
  for (int x : plan.leftover) EXPECT_TRUE(seen.insert(x).second);
  EXPECT_EQ(static_cast<int>(seen.size()), c.total_users);
}

TEST(FormClusters, LargerClustersAndSingletons) {
  std::mt19937_64 rng(6);
  const auto rows = random_rows(12, 4, rng);
  const ClusterPlan three = cluster_users(rows, 3, 3, 0.5, rng);
  for (const auto& cl : three.clusters) EXPECT_EQ(cl.size(), 3u);
  const ClusterPlan single = cluster_users(rows, 1, 4, 0.5, rng);
  // Singletons are the four strongest users.
  std::vector<double> norms;
  for (const auto& r : rows) norms.push_back(r.squaredNorm());
  std::sort(norms.begin(), norms.end(), std::greater<>());
  for (const auto& cl : single.clusters) EXPECT_GE(rows[cl[0]].squaredNorm(), norms[3]);
  EXPECT_THROW(cluster_users(rows, 5, 3, 0.5, rng), std::invalid_argument);
}

TEST(FormClusters, MoreCorrelatedThanRandomPairing) {
  SystemConfig c;
  double proposed = 0.0;
  double random = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(100 + t);
    const auto u = scenario_channels(c, rng);
    auto mean_corr = [&](const ClusterPlan& p) {
      double s = 0.0;
      for (const auto& cl : p.clusters) s += correlation(u[cl[0]], u[cl[1]]);
      return s / p.num_clusters();
    };
    proposed += mean_corr(cluster_users(u, 2, 5, c.correlation_threshold, rng));
    random += mean_corr(random_clusters(u, 2, 5, rng));
  }
  EXPECT_GE(proposed / trials, random / trials);
}

}  // namespace
}  // namespace irsnoma
