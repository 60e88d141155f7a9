// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "irsnoma/config.hpp"
#include "irsnoma/linalg.hpp"

namespace irsnoma {

/// ULA steering vector: element e is exp(-j 2 pi e (d/lambda) sin(angle)).
template <typename Scalar>
CVector<Scalar> array_response(Scalar angle, int num_elements, Scalar spacing_ratio) {
  if (num_elements < 1) throw std::invalid_argument("array_response: num_elements must be >= 1");
  CVector<Scalar> a(num_elements);
  const Scalar step = -Scalar(2) * std::numbers::pi_v<Scalar> * spacing_ratio * std::sin(angle);
  for (int e = 0; e < num_elements; ++e) a(e) = std::polar(Scalar(1), step * Scalar(e));
  return a;
}

/// Power path-loss factor L0 (d/d0)^(-alpha).
template <typename Scalar>
Scalar pathloss_factor(Scalar ref_pathloss, Scalar distance, Scalar ref_distance, Scalar exponent) {
  return ref_pathloss * std::pow(distance / ref_distance, -exponent);
}

/// Effective channel u = b^H W (a 1 x M row) of a cascaded N x M channel.
template <typename DerivedW, typename DerivedB>
CRowVector<typename DerivedW::RealScalar> effective_channel(const Eigen::MatrixBase<DerivedW>& cascaded,
                                                            const Eigen::MatrixBase<DerivedB>& reflection) {
  if (reflection.size() != cascaded.rows()) {
    throw std::invalid_argument("effective_channel: reflection length does not match cascaded rows");
  }
  return reflection.adjoint() * cascaded;
}

struct UserGeometry {
  std::vector<double> irs_user_distance;   // m, in (0, user_radius]
  std::vector<double> irs_departure;       // rad, per user
  double irs_arrival = 0.0;                // rad, BS -> IRS
  double bs_departure = 0.0;               // rad, BS -> IRS
};

/// Binomial point process: users uniform in a disc around the IRS.
UserGeometry draw_geometry(const SystemConfig& config, std::mt19937_64& rng);

/// Rician channels for every user. The BS-IRS link is common to all users.
struct ChannelSet {
  CMatrixd bs_irs;                    // N x M
  std::vector<CVectord> irs_user;     // N per user
  std::vector<CMatrixd> cascaded;     // diag(h^H) H, N x M per user

  int num_users() const { return static_cast<int>(cascaded.size()); }
};

ChannelSet synthesize_channels(const SystemConfig& config, const UserGeometry& geometry, std::mt19937_64& rng);

/// diag(h^H) H without forming the diagonal matrix.
CMatrixd cascade(const CVectord& irs_user, const CMatrixd& bs_irs);

std::vector<CRowVectord> effective_channels(const ChannelSet& channels, const CVectord& reflection);

/// |u_{i,k} f_j|^2 for every served user (cluster i, decode slot k) and every beam j.
/// Users inside a cluster are stored weakest first.
struct LinkGains {
  std::vector<Eigen::MatrixXd> gain;             // gain[i](k, j)
  std::vector<Eigen::VectorXd> channel_norm_sq;  // ||u_{i,k}||^2
  Eigen::VectorXd beam_norm_sq;                  // ||f_j||^2

  int num_clusters() const { return static_cast<int>(gain.size()); }
  int users_per_cluster() const { return gain.empty() ? 0 : static_cast<int>(gain.front().rows()); }
};

/// `users[i][k]` is the effective channel row of user k in cluster i.
LinkGains link_gains(const std::vector<std::vector<CRowVectord>>& users, const std::vector<CVectord>& beams);

/// Psi_{i,k}: inter-cluster interference power at every served user (I x K, watts).
Eigen::MatrixXd inter_cluster_interference(const LinkGains& links, const Eigen::MatrixXd& beta,
                                           double cluster_power);

/// Per-cluster view used by the SINR and rate formulas.
struct ClusterLink {
  Eigen::VectorXd own_gain;         // |u_{i,k} f_i|^2
  Eigen::VectorXd interference;     // Psi_{i,k}
  Eigen::VectorXd channel_norm_sq;  // decode-order key
  double beam_norm_sq = 1.0;
};

ClusterLink cluster_link(const LinkGains& links, int cluster, const Eigen::MatrixXd& beta, double cluster_power);

/// SINR of decode slot k after SIC. Requires nondecreasing channel_norm_sq
/// (checked with assert).
double sinr(int k, const ClusterLink& link, const Eigen::Ref<const Eigen::VectorXd>& beta,
            const SystemConfig& config);

struct RatePower {
  double rate = 0.0;   // bits/s
  double power = 0.0;  // W
};

RatePower cluster_rate_and_power(const ClusterLink& link, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                 const Eigen::Ref<const Eigen::VectorXd>& sinr_values, const SystemConfig& config);

/// Feasibility tolerances for reported solutions.
inline constexpr double kSinrSlack = 1e-3;
inline constexpr double kSicSlack = 1e-6;
inline constexpr double kPowerSlack = 1e-6;

struct SystemMetrics {
  Eigen::MatrixXd sinr;          // I x K
  Eigen::MatrixXd interference;  // I x K
  Eigen::VectorXd rate;
  Eigen::VectorXd power;
  double energy_efficiency = 0.0;  // sum_i R_i / P_{i,T}
  double far_user_interference = 0.0;
  bool qos_met = true;
  bool sic_met = true;
  bool power_met = true;

  bool feasible() const { return qos_met && sic_met && power_met; }
};

SystemMetrics evaluate_system(const LinkGains& links, const Eigen::MatrixXd& beta, const SystemConfig& config);

}  // namespace irsnoma
