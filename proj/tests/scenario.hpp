// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "irsnoma/beamforming.hpp"
#include "irsnoma/channel.hpp"
#include "irsnoma/clustering.hpp"
#include "irsnoma/orca.hpp"

namespace irsnoma::testing {

/// One channel draw pushed through clustering and zero-forcing at b = 1.
struct Scenario {
  SystemConfig config;
  ChannelSet channels;
  ClusterPlan plan;
  BeamformerSet beams;
  LinkGains links;
  LiftedSystem lifted;
};

inline Scenario make_scenario(const SystemConfig& config, std::uint64_t seed) {
  Scenario s;
  s.config = config;
  std::mt19937_64 rng(seed);
  s.channels = synthesize_channels(config, draw_geometry(config, rng), rng);
  const auto u = effective_channels(s.channels, CVectord::Ones(config.num_irs_elements));
  s.plan = cluster_users(u, config.users_per_cluster, config.num_clusters, config.correlation_threshold, rng);
  std::vector<CRowVectord> strongest;
  std::vector<std::vector<CRowVectord>> users;
  for (const auto& cl : s.plan.clusters) {
    strongest.push_back(u[cl.back()]);
    std::vector<CRowVectord> rows;
    for (int x : cl) rows.push_back(u[x]);
    users.push_back(std::move(rows));
  }
  s.beams = build_zf_beamformers(strongest);
  s.links = link_gains(users, s.beams.beams);
  s.lifted = lift_user_matrices(s.channels, s.beams, s.plan);
  return s;
}

inline CVectord random_phases(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-3.14159, 3.14159);
  CVectord b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = std::polar(1.0, angle(rng));
  return b;
}

inline CMatrixd random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CMatrixd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = cdouble(normal(rng), normal(rng));
  return 0.5 * (a + a.adjoint());
}

/// Random PSD matrix with diag(B) <= 1.
inline CMatrixd random_lift(Eigen::Index n, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CMatrixd g(n, rank);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = cdouble(normal(rng), normal(rng));
  CMatrixd b = g * g.adjoint();
  return b / b.diagonal().real().maxCoeff();
}

}  // namespace irsnoma::testing
