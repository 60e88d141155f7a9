// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "irsnoma/beamforming.hpp"
#include "irsnoma/channel.hpp"
#include "irsnoma/clustering.hpp"
#include "irsnoma/conic_solver.hpp"
#include "irsnoma/config.hpp"

namespace irsnoma {

/// omega[i][k][j] = W_{(i,k)} f_j: the cascaded channel of user k in cluster i seen
/// through beam j. The user's effective gain on beam j is |b^H omega|^2.
struct LiftedSystem {
  std::vector<std::vector<std::vector<CVectord>>> omega;

  int num_clusters() const { return static_cast<int>(omega.size()); }
  int users_per_cluster() const { return omega.empty() ? 0 : static_cast<int>(omega.front().size()); }
  Eigen::Index dimension() const { return omega.empty() ? 0 : omega.front().front().front().size(); }
  /// W_{i,k} = omega omega^H for the user's own beam.
  CMatrixd lifted(int cluster, int user) const;
};

LiftedSystem lift_user_matrices(const ChannelSet& channels, const BeamformerSet& beamformers,
                                const ClusterPlan& plan);

/// Gains |u_{i,k} f_j|^2 = Re tr(B omega omega^H) for a lifted B. `decode_order` supplies
/// channel_norm_sq, which stays fixed while the reflection changes.
LinkGains lifted_link_gains(const LiftedSystem& lifted, const CMatrixd& b, const LinkGains& decode_order);
LinkGains reflection_link_gains(const LiftedSystem& lifted, const CVectord& b, const LinkGains& decode_order);

/// One user's rate in noise-normalized units: log2 S(B) - log2 D(B) with
/// S(B) = Re tr(signal B) and D(B) = Re tr(interference B) + 1.
struct UserTerm {
  LowRankHermitian signal;
  LowRankHermitian interference;
};

/// User (i, k) for the allocation `beta` (I x K), normalized by the noise power.
UserTerm user_term(const LiftedSystem& lifted, int cluster, int user, const Eigen::MatrixXd& beta,
                   double cluster_power, double noise_power);

/// f1 = log2 S(B), f2 = log2 D(B) and its tangent majorant at the anchor.
struct DcTerms {
  UserTerm user;
  CMatrixd anchor;
  double f2_anchor = 0.0;
  CMatrixd gradient;  // d f2 / dB at the anchor

  double f1(const CMatrixd& b) const;
  double f2(const CMatrixd& b) const;
  double f2_bar(const CMatrixd& b) const;
};

/// Throws std::domain_error when a log argument is nonpositive at the anchor.
DcTerms dc_linearize(const UserTerm& user, const CMatrixd& anchor);

struct RankOnePenalty {
  double exact = 0.0;      // tr(B) - ||B||_2
  double surrogate = 0.0;  // tr(B) - (||A||_2 + Re tr(k k^H (B - A))) >= exact
  CVectord leading;        // k: leading eigenvector of the anchor A
};

RankOnePenalty rank_one_penalty(const CMatrixd& b, const CMatrixd& anchor);

/// Unit-modulus vector from the leading eigenvector phases (zero entries map to 1).
CVectord extract_reflection(const CMatrixd& b);

struct OrcaTrace {
  int iteration = 0;
  double energy_efficiency = 0.0;         // best feasible unit-modulus EE so far
  double lifted_energy_efficiency = 0.0;  // EE of the lifted iterate
  double exact_penalty = 0.0;
  double penalty_factor = 0.0;
};

struct ReflectionState {
  CVectord b;
  CMatrixd lift;
  double penalty_factor = 0.0;
  double exact_penalty = 0.0;
  double energy_efficiency = 0.0;          // EE at b
  double initial_energy_efficiency = 0.0;  // EE at the all-ones start
  std::vector<OrcaTrace> trace;
  int iterations = 0;
  bool converged = false;
  bool fallback = false;  // no extracted vector beat the start, b is the start
  SdpStatus last_status = SdpStatus::Optimal;
};

/// Penalized DC iterations on the lifted reflection with beta fixed. `sinr_target`
/// is the QoS level enforced in Stage 1. The returned b is feasible and never has
/// lower EE than the all-ones start.
ReflectionState orca_iterate(const LiftedSystem& lifted, const LinkGains& decode_order, const Eigen::MatrixXd& beta,
                             double sinr_target, const SystemConfig& config, std::mt19937_64& rng);

}  // namespace irsnoma
