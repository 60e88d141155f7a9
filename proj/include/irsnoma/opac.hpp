// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "irsnoma/channel.hpp"
#include "irsnoma/config.hpp"

namespace irsnoma {

/// Tangent lower bound of log2(1 + g) in log2(g): zeta log2(g) + omega <= log2(1 + g),
/// tight at g = g0.
template <typename Scalar>
struct ScaCoefficients {
  Scalar zeta;
  Scalar omega;

  Scalar operator()(Scalar gamma) const { return zeta * std::log2(gamma) + omega; }
};

template <typename Scalar>
ScaCoefficients<Scalar> sca_bound(Scalar gamma0) {
  if (!(gamma0 > Scalar(0))) throw std::invalid_argument("sca_bound: gamma0 must be positive");
  const Scalar zeta = gamma0 / (Scalar(1) + gamma0);
  return {zeta, std::log2(Scalar(1) + gamma0) - zeta * std::log2(gamma0)};
}

/// One cluster with the interference from other clusters frozen. Users are
/// stored weakest first.
struct ClusterModel {
  Eigen::VectorXd gain;   // |u_k f|^2
  Eigen::VectorXd noise;  // Psi_k + sigma^2
  double beam_norm_sq = 1.0;
  double power = 1.0;       // P_i
  double power_cap = 1.0;   // bound on ||f||^2 P_i sum(beta)
  double circuit_power = 1.0;
  double bandwidth = 1.0;
  double min_sinr = 1.0;
  double sic_gap = 0.0;

  int size() const { return static_cast<int>(gain.size()); }
  int num_constraints() const { return 2 * size(); }  // K SINR, K - 1 SIC, 1 power
  double transmit_power(const Eigen::VectorXd& beta) const { return beam_norm_sq * power * beta.sum(); }
  double total_power(const Eigen::VectorXd& beta) const { return transmit_power(beta) + circuit_power; }
};

ClusterModel make_cluster_model(const LinkGains& links, int cluster, const Eigen::MatrixXd& interference,
                                const SystemConfig& config);

Eigen::VectorXd cluster_sinr(const ClusterModel& model, const Eigen::VectorXd& beta);
double cluster_rate(const ClusterModel& model, const Eigen::VectorXd& beta);

/// SCA surrogate sum rate: sum_k BW (zeta_k log2 gamma_k + omega_k).
double surrogate_rate(const ClusterModel& model, const std::vector<ScaCoefficients<double>>& sca,
                      const Eigen::VectorXd& beta);

/// Constraint values, all >= 0 when feasible, in the order
/// [SINR_1..SINR_K, SIC_1..SIC_{K-1}, power]. Every entry is affine in beta.
Eigen::VectorXd constraint_values(const ClusterModel& model, const Eigen::VectorXd& beta);

/// True when every constraint holds up to a relative tolerance.
bool satisfies_constraints(const ClusterModel& model, const Eigen::VectorXd& beta, double rel_tol = 1e-9);

/// Componentwise smallest beta meeting the SINR and SIC constraints (ignores the
/// power cap), inflated by `margin`.
Eigen::VectorXd minimal_power_point(const ClusterModel& model, double margin = 1e-9);

/// Furthest point on the segment from `anchor` (feasible) toward `beta` that is feasible.
Eigen::VectorXd repair(const ClusterModel& model, const Eigen::VectorXd& beta, const Eigen::VectorXd& anchor);

/// Multipliers in the units of the Lagrangian.
struct PacDuals {
  double alpha = 0.0;       // power budget
  Eigen::VectorXd phi;      // SINR, size K
  Eigen::VectorXd upsilon;  // SIC, size K (last entry unused)
};

struct PacValue {
  double beta = 0.0;
  bool dual_infeasible = false;
};

/// Linear coefficient A_k of the stationarity condition
/// BW zeta_k / (ln2 beta_k) = A_k + sum_{z<k} BW zeta_z P g_z / (ln2 D_z).
double stationarity_offset(int k, const ClusterModel& model, const PacDuals& duals, double rho);

/// Closed-form coefficient for user k with the interference terms of weaker users
/// evaluated at `beta`. A nonpositive denominator is flagged.
PacValue closed_form_pac(int k, const ClusterModel& model, const Eigen::VectorXd& zeta, double rho,
                         const PacDuals& duals, const Eigen::VectorXd& beta);

struct PacSolution {
  Eigen::VectorXd beta;
  bool dual_infeasible = false;
  int sweeps = 0;
};

/// Self-consistent solution of the stationarity system: ascending coordinate sweeps
/// where each beta_k solves its own condition exactly, boxed to [0, power_cap / (||f||^2 P)].
PacSolution solve_pac(const ClusterModel& model, const Eigen::VectorXd& zeta, double rho, const PacDuals& duals,
                      Eigen::VectorXd start, int max_sweeps = 100, double tol = 1e-13);

/// Projected subgradient step on normalized multipliers: lambda <- [lambda - step * slack]^+.
Eigen::VectorXd subgradient_update(const Eigen::VectorXd& duals, const Eigen::VectorXd& scaled_slacks, double step);

/// Maps normalized multipliers to Lagrangian units using constraint scales taken at `beta`.
PacDuals scale_duals(const ClusterModel& model, const Eigen::VectorXd& normalized, const Eigen::VectorXd& beta);

/// Per-constraint normalizers matching scale_duals.
Eigen::VectorXd constraint_scales(const ClusterModel& model, const Eigen::VectorXd& beta);

struct ParametricResult {
  Eigen::VectorXd beta;   // best feasible point found
  double value = 0.0;     // surrogate R - rho P_T at beta (>= the value at the start point)
  Eigen::VectorXd duals;  // normalized, for warm starts
  double step_size = 0.0;
  int dual_infeasible_events = 0;
};

/// Maximizes surrogate_rate - rho * total_power over the feasible set of one cluster
/// by dual subgradient ascent. `start` must be feasible.
ParametricResult maximize_parametric(const ClusterModel& model, const std::vector<ScaCoefficients<double>>& sca,
                                     double rho, const Eigen::VectorXd& start, const Eigen::VectorXd& duals,
                                     const OpacOptions& options);

struct Stage1Trace {
  int iteration = 0;
  Eigen::VectorXd rho;  // per cluster
  double energy_efficiency = 0.0;
  double residual = 0.0;  // max_i F_i / R_i
};

struct Stage1State {
  Eigen::MatrixXd beta;   // I x K
  Eigen::VectorXd rho;
  std::vector<Eigen::VectorXd> duals;
  std::vector<Stage1Trace> trace;
  int iterations = 0;
  bool converged = false;
  bool feasible = false;     // the configured SINR target is met
  double sinr_target = 0.0;  // target actually enforced (backed off when infeasible)
  double residual = 0.0;
};

/// beta_k proportional to 1 / ||u_k||^2 with sum(beta) = fraction * min(1, Pmax / (||f||^2 P)).
Eigen::MatrixXd warm_start_pac(const LinkGains& links, const SystemConfig& config);

/// Smallest joint allocation meeting every SINR and SIC constraint under mutual
/// interference, or nothing when some cluster would exceed its power budget.
std::optional<Eigen::MatrixXd> joint_minimal_allocation(const LinkGains& links, const SystemConfig& config);

/// Largest common SINR target, at most config.min_sinr, for which
/// joint_minimal_allocation succeeds (bisection to 1e-6 relative). Zero if none.
double attainable_sinr_target(const LinkGains& links, const SystemConfig& config);

/// Fraction of the attainable target enforced when the configured one cannot be met.
inline constexpr double kSinrBackoff = 0.5;

/// Dinkelbach iterations over all clusters with interference from the previous
/// iterate. Every rho_i in the trace is nondecreasing. When the configured SINR
/// target is jointly unattainable the run proceeds with kSinrBackoff times the
/// attainable target and reports feasible = false.
Stage1State dinkelbach_outer(const LinkGains& links, const SystemConfig& config);

}  // namespace irsnoma
