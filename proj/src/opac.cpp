// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/opac.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace irsnoma {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr int kMaxStepHalvings = 5;

double suffix_sum(const Eigen::VectorXd& beta, int k) { return beta.tail(beta.size() - k - 1).sum(); }

double box_limit(const ClusterModel& m) { return m.power_cap / (m.beam_norm_sq * m.power); }

std::vector<ScaCoefficients<double>> refresh_sca(const ClusterModel& model, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd g = cluster_sinr(model, beta);
  std::vector<ScaCoefficients<double>> sca;
  sca.reserve(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) sca.push_back(sca_bound(g(k)));
  return sca;
}

Eigen::VectorXd zeta_of(const std::vector<ScaCoefficients<double>>& sca) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(sca.size()));
  for (std::size_t k = 0; k < sca.size(); ++k) z(static_cast<Eigen::Index>(k)) = sca[k].zeta;
  return z;
}

double parametric_value(const ClusterModel& model, const std::vector<ScaCoefficients<double>>& sca, double rho,
                        const Eigen::VectorXd& beta) {
  return surrogate_rate(model, sca, beta) - rho * model.total_power(beta);
}

// Exact maximizer over [0, ub] of the Lagrangian in beta_k with the other entries fixed.
// q(x) = BW zeta_k - ln2 A_k x - sum_{z<k} BW zeta_z a_z x / (a_z (x + r_z) + n_z) is convex
// and decreasing when A_k > 0, so Newton from the left converges monotonically to its root.
PacValue coordinate_solve(int k, const ClusterModel& m, const Eigen::VectorXd& zeta, double rho,
                          const PacDuals& duals, const Eigen::VectorXd& beta) {
  const double a_k = stationarity_offset(k, m, duals, rho);
  const double ub = box_limit(m);
  if (!(a_k > 0.0)) return {ub, true};

  const double bw = m.bandwidth;
  auto eval = [&](double x, double* slope) {
    double q = bw * zeta(k) - kLn2 * a_k * x;
    double dq = -kLn2 * a_k;
    for (int z = 0; z < k; ++z) {
      const double a = m.power * m.gain(z);
      const double c = a * (suffix_sum(beta, z) - beta(k)) + m.noise(z);
      const double d = a * x + c;
      q -= bw * zeta(z) * a * x / d;
      dq -= bw * zeta(z) * a * c / (d * d);
    }
    if (slope) *slope = dq;
    return q;
  };

  if (eval(ub, nullptr) >= 0.0) return {ub, false};
  double x = 0.0;
  for (int it = 0; it < 500; ++it) {
    double dq = 0.0;
    const double q = eval(x, &dq);
    const double next = std::min(ub, x - q / dq);
    if (!(next > x) || next - x <= 1e-15 * next) {
      x = std::max(x, next);
      break;
    }
    x = next;
  }
  return {x, false};
}

}  // namespace

ClusterModel make_cluster_model(const LinkGains& links, int cluster, const Eigen::MatrixXd& interference,
                                const SystemConfig& config) {
  ClusterModel m;
  m.gain = links.gain[cluster].col(cluster);
  m.noise = interference.row(cluster).transpose().array() + config.noise_power;
  m.beam_norm_sq = links.beam_norm_sq(cluster);
  m.power = config.cluster_power;
  m.power_cap = config.max_power;
  m.circuit_power = config.circuit_power;
  m.bandwidth = config.bandwidth;
  m.min_sinr = config.min_sinr;
  m.sic_gap = config.sic_power_gap;
  return m;
}

Eigen::VectorXd cluster_sinr(const ClusterModel& m, const Eigen::VectorXd& beta) {
  Eigen::VectorXd g(m.size());
  for (int k = 0; k < m.size(); ++k) {
    const double a = m.power * m.gain(k);
    g(k) = a * beta(k) / (a * suffix_sum(beta, k) + m.noise(k));
  }
  return g;
}

double cluster_rate(const ClusterModel& m, const Eigen::VectorXd& beta) {
  return m.bandwidth * cluster_sinr(m, beta).array().log1p().sum() / kLn2;
}

double surrogate_rate(const ClusterModel& m, const std::vector<ScaCoefficients<double>>& sca,
                      const Eigen::VectorXd& beta) {
  const Eigen::VectorXd g = cluster_sinr(m, beta);
  double r = 0.0;
  for (int k = 0; k < m.size(); ++k) r += m.bandwidth * sca[k](g(k));
  return r;
}

Eigen::VectorXd constraint_values(const ClusterModel& m, const Eigen::VectorXd& beta) {
  const int k_count = m.size();
  Eigen::VectorXd c(2 * k_count);
  for (int k = 0; k < k_count; ++k) {
    const double a = m.power * m.gain(k);
    c(k) = a * beta(k) - m.min_sinr * (a * suffix_sum(beta, k) + m.noise(k));
  }
  for (int k = 0; k + 1 < k_count; ++k) {
    c(k_count + k) = m.beam_norm_sq * m.power * m.gain(k + 1) * (beta(k) - suffix_sum(beta, k)) - m.sic_gap;
  }
  c(2 * k_count - 1) = m.power_cap - m.transmit_power(beta);
  return c;
}

bool satisfies_constraints(const ClusterModel& m, const Eigen::VectorXd& beta, double rel_tol) {
  if ((beta.array() < 0.0).any()) return false;
  const Eigen::VectorXd g = cluster_sinr(m, beta);
  if ((g.array() < m.min_sinr * (1.0 - rel_tol)).any()) return false;
  for (int k = 0; k + 1 < m.size(); ++k) {
    const double gap = m.beam_norm_sq * m.power * m.gain(k + 1) * (beta(k) - suffix_sum(beta, k));
    if (gap < m.sic_gap * (1.0 - rel_tol)) return false;
  }
  return m.transmit_power(beta) <= m.power_cap * (1.0 + rel_tol);
}

Eigen::VectorXd minimal_power_point(const ClusterModel& m, double margin) {
  const int k_count = m.size();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k_count);
  double stronger = 0.0;
  for (int k = k_count - 1; k >= 0; --k) {
    double need = m.min_sinr * (stronger + m.noise(k) / (m.power * m.gain(k)));
    if (k + 1 < k_count) {
      need = std::max(need, stronger + m.sic_gap / (m.beam_norm_sq * m.power * m.gain(k + 1)));
    }
    beta(k) = (1.0 + margin) * need;
    stronger += beta(k);
  }
  return beta;
}

Eigen::VectorXd repair(const ClusterModel& m, const Eigen::VectorXd& beta, const Eigen::VectorXd& anchor) {
  const Eigen::VectorXd c_anchor = constraint_values(m, anchor);
  const Eigen::VectorXd c_target = constraint_values(m, beta);
  double t = 1.0;
  for (Eigen::Index j = 0; j < c_target.size(); ++j) {
    if (c_target(j) < 0.0) {
      const double denom = c_anchor(j) - c_target(j);
      t = std::min(t, denom > 0.0 ? std::max(0.0, c_anchor(j) / denom) : 0.0);
    }
  }
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (beta(k) < 0.0) t = std::min(t, anchor(k) / (anchor(k) - beta(k)));
  }
  return anchor + t * (beta - anchor);
}

double stationarity_offset(int k, const ClusterModel& m, const PacDuals& duals, double rho) {
  const double fp = m.beam_norm_sq * m.power;
  double a = (rho + duals.alpha) * fp - duals.phi(k) * m.power * m.gain(k);
  if (k + 1 < m.size()) a -= duals.upsilon(k) * fp * m.gain(k + 1);
  for (int z = 0; z < k; ++z) {
    a += duals.phi(z) * m.min_sinr * m.power * m.gain(z) + duals.upsilon(z) * fp * m.gain(z + 1);
  }
  return a;
}

PacValue closed_form_pac(int k, const ClusterModel& m, const Eigen::VectorXd& zeta, double rho,
                         const PacDuals& duals, const Eigen::VectorXd& beta) {
  double denom = kLn2 * stationarity_offset(k, m, duals, rho);
  for (int z = 0; z < k; ++z) {
    const double a = m.power * m.gain(z);
    denom += m.bandwidth * zeta(z) * a / (a * suffix_sum(beta, z) + m.noise(z));
  }
  if (!(denom > 0.0)) return {0.0, true};
  return {m.bandwidth * zeta(k) / denom, false};
}

PacSolution solve_pac(const ClusterModel& m, const Eigen::VectorXd& zeta, double rho, const PacDuals& duals,
                      Eigen::VectorXd start, int max_sweeps, double tol) {
  PacSolution sol;
  sol.beta = std::move(start);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    sol.sweeps = sweep;
    sol.dual_infeasible = false;
    double change = 0.0;
    for (int k = 0; k < m.size(); ++k) {
      const PacValue v = coordinate_solve(k, m, zeta, rho, duals, sol.beta);
      sol.dual_infeasible = sol.dual_infeasible || v.dual_infeasible;
      change = std::max(change, std::abs(v.beta - sol.beta(k)) / std::max(v.beta, 1e-300));
      sol.beta(k) = v.beta;
    }
    if (change <= tol) break;
  }
  return sol;
}

Eigen::VectorXd subgradient_update(const Eigen::VectorXd& duals, const Eigen::VectorXd& scaled_slacks, double step) {
  return (duals - step * scaled_slacks).cwiseMax(0.0);
}

Eigen::VectorXd constraint_scales(const ClusterModel& m, const Eigen::VectorXd& beta) {
  const int k_count = m.size();
  constexpr double kFloor = 1e-300;
  Eigen::VectorXd s(2 * k_count);
  for (int k = 0; k < k_count; ++k) s(k) = std::max(kFloor, m.power * m.gain(k) * beta(k));
  for (int k = 0; k + 1 < k_count; ++k) {
    s(k_count + k) = std::max(kFloor, m.beam_norm_sq * m.power * m.gain(k + 1) * beta(k));
  }
  s(2 * k_count - 1) = m.power_cap;
  return s;
}

PacDuals scale_duals(const ClusterModel& m, const Eigen::VectorXd& normalized, const Eigen::VectorXd& beta) {
  const int k_count = m.size();
  const Eigen::VectorXd s = constraint_scales(m, beta);
  // Normalized multipliers are in units of the objective scale BW.
  const Eigen::VectorXd raw = m.bandwidth * normalized.cwiseQuotient(s);
  PacDuals d;
  d.phi = raw.head(k_count);
  d.upsilon = Eigen::VectorXd::Zero(k_count);
  d.upsilon.head(k_count - 1) = raw.segment(k_count, k_count - 1);
  d.alpha = raw(2 * k_count - 1);
  return d;
}

ParametricResult maximize_parametric(const ClusterModel& m, const std::vector<ScaCoefficients<double>>& sca,
                                     double rho, const Eigen::VectorXd& start, const Eigen::VectorXd& duals,
                                     const OpacOptions& options) {
  const Eigen::VectorXd zeta = zeta_of(sca);
  const Eigen::VectorXd scales = constraint_scales(m, start);
  const Eigen::VectorXd floor_point = minimal_power_point(m);
  const bool floor_ok = satisfies_constraints(m, floor_point);

  ParametricResult res;
  res.beta = start;
  res.value = parametric_value(m, sca, rho, start);
  res.duals = duals.size() == m.num_constraints() ? duals : Eigen::VectorXd::Zero(m.num_constraints());
  res.step_size = options.step_size;

  auto consider = [&](const Eigen::VectorXd& candidate) {
    const double v = parametric_value(m, sca, rho, candidate);
    if (v > res.value && satisfies_constraints(m, candidate)) {
      res.value = v;
      res.beta = candidate;
    }
  };

  Eigen::VectorXd iterate = start;
  for (int t = 1; t <= options.dual_iterations; ++t) {
    const Eigen::VectorXd slack = constraint_values(m, iterate).cwiseQuotient(scales);
    double step = res.step_size / std::sqrt(double(t));
    Eigen::VectorXd trial;
    PacSolution sol;
    for (int attempt = 0;; ++attempt) {
      trial = subgradient_update(res.duals, slack, step);
      sol = solve_pac(m, zeta, rho, scale_duals(m, trial, start), iterate);
      if (!sol.dual_infeasible || attempt == kMaxStepHalvings) break;
      ++res.dual_infeasible_events;
      res.step_size *= 0.5;
      step *= 0.5;
    }
    res.duals = trial;
    iterate = sol.beta;
    consider(repair(m, iterate, start));
    if (floor_ok) consider(repair(m, iterate, floor_point));
  }
  return res;
}

Eigen::MatrixXd warm_start_pac(const LinkGains& links, const SystemConfig& config) {
  const int clusters = links.num_clusters();
  Eigen::MatrixXd beta(clusters, links.users_per_cluster());
  for (int i = 0; i < clusters; ++i) {
    const Eigen::VectorXd w = links.channel_norm_sq[i].cwiseInverse();
    const double budget = std::min(1.0, config.max_power / (links.beam_norm_sq(i) * config.cluster_power));
    beta.row(i) = (config.opac.warm_start_fraction * budget / w.sum()) * w.transpose();
  }
  return beta;
}

std::optional<Eigen::MatrixXd> joint_minimal_allocation(const LinkGains& links, const SystemConfig& config) {
  const int clusters = links.num_clusters();
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(clusters, links.users_per_cluster());
  // Interference is monotone in beta, so this sequence increases toward the least fixed point.
  for (int it = 0; it < 2000; ++it) {
    const Eigen::MatrixXd psi = inter_cluster_interference(links, beta, config.cluster_power);
    Eigen::MatrixXd next(beta.rows(), beta.cols());
    for (int i = 0; i < clusters; ++i) {
      const ClusterModel m = make_cluster_model(links, i, psi, config);
      next.row(i) = minimal_power_point(m).transpose();
      if (m.transmit_power(next.row(i).transpose()) > m.power_cap) return std::nullopt;
    }
    const double change = ((next - beta).array().abs() / next.array().max(1e-300)).maxCoeff();
    beta = next;
    if (change <= 1e-12) break;
  }
  const Eigen::MatrixXd psi = inter_cluster_interference(links, beta, config.cluster_power);
  for (int i = 0; i < clusters; ++i) {
    if (!satisfies_constraints(make_cluster_model(links, i, psi, config), beta.row(i).transpose())) {
      return std::nullopt;
    }
  }
  return beta;
}

namespace {

struct Snapshot {
  std::vector<ClusterModel> models;
  Eigen::VectorXd rate;
  Eigen::VectorXd rho;
  bool feasible = true;
};

Snapshot snapshot(const LinkGains& links, const Eigen::MatrixXd& beta, const Eigen::VectorXd& caps,
                  const SystemConfig& config) {
  const int clusters = links.num_clusters();
  const Eigen::MatrixXd psi = inter_cluster_interference(links, beta, config.cluster_power);
  Snapshot s;
  s.rate.resize(clusters);
  s.rho.resize(clusters);
  for (int i = 0; i < clusters; ++i) {
    ClusterModel m = make_cluster_model(links, i, psi, config);
    m.power_cap = caps(i);
    const Eigen::VectorXd b = beta.row(i).transpose();
    s.rate(i) = cluster_rate(m, b);
    s.rho(i) = s.rate(i) / m.total_power(b);
    s.feasible = s.feasible && satisfies_constraints(m, b);
    s.models.push_back(std::move(m));
  }
  return s;
}

}  // namespace

double attainable_sinr_target(const LinkGains& links, const SystemConfig& config) {
  if (joint_minimal_allocation(links, config)) return config.min_sinr;
  SystemConfig probe = config;
  double lo = 0.0;
  double hi = config.min_sinr;
  while (hi - lo > 1e-6 * hi) {
    probe.min_sinr = 0.5 * (lo + hi);
    (joint_minimal_allocation(links, probe) ? lo : hi) = probe.min_sinr;
  }
  return lo;
}

Stage1State dinkelbach_outer(const LinkGains& links, const SystemConfig& base_config) {
  const int clusters = links.num_clusters();
  Stage1State st;
  SystemConfig config = base_config;
  Eigen::VectorXd caps = Eigen::VectorXd::Constant(clusters, config.max_power);
  st.duals.assign(clusters, Eigen::VectorXd());

  auto floor = joint_minimal_allocation(links, config);
  st.feasible = floor.has_value();
  if (!floor) {
    config.min_sinr = kSinrBackoff * attainable_sinr_target(links, config);
    if (config.min_sinr > 0.0) floor = joint_minimal_allocation(links, config);
  }
  st.sinr_target = config.min_sinr;
  if (!floor) {
    st.beta = warm_start_pac(links, config);
    const Snapshot s = snapshot(links, st.beta, caps, config);
    st.rho = s.rho;
    st.trace.push_back({0, s.rho, s.rho.sum(), 0.0});
    return st;
  }

  // Scale the joint floor up (it stays feasible since interference dominates noise),
  // then move each cluster toward the warm-start shape inside its own power total.
  // Interference depends on per-cluster totals only, so no cluster is hurt by this.
  Eigen::VectorXd totals(clusters);
  for (int i = 0; i < clusters; ++i) totals(i) = links.beam_norm_sq(i) * config.cluster_power * floor->row(i).sum();
  const double scale =
      std::max(1.0, config.opac.warm_start_fraction * (caps.array() / totals.array()).minCoeff());
  const Eigen::MatrixXd anchor = scale * *floor;
  const Eigen::MatrixXd psi = inter_cluster_interference(links, anchor, config.cluster_power);
  const Eigen::MatrixXd warm = warm_start_pac(links, config);
  st.beta = anchor;
  for (int i = 0; i < clusters; ++i) {
    ClusterModel m = make_cluster_model(links, i, psi, config);
    m.power_cap = scale * totals(i);
    const Eigen::VectorXd shape = warm.row(i).transpose() * (m.power_cap / m.transmit_power(warm.row(i).transpose()));
    st.beta.row(i) = repair(m, shape, anchor.row(i).transpose()).transpose();
  }
  if (!snapshot(links, st.beta, caps, config).feasible) st.beta = anchor;

  Snapshot cur = snapshot(links, st.beta, caps, config);
  st.trace.push_back({0, cur.rho, cur.rho.sum(), 0.0});

  for (int l = 1; l <= config.opac.max_iterations; ++l) {
    st.iterations = l;
    std::vector<ParametricResult> results;
    double residual = 0.0;
    for (int i = 0; i < clusters; ++i) {
      const Eigen::VectorXd b = st.beta.row(i).transpose();
      results.push_back(maximize_parametric(cur.models[i], refresh_sca(cur.models[i], b), cur.rho(i), b,
                                            st.duals[i], config.opac));
      st.duals[i] = results.back().duals;
      residual = std::max(residual, results.back().value / cur.rate(i));
    }
    st.residual = residual;
    if (residual <= config.opac.tolerance) {
      st.converged = true;
      break;
    }

    std::vector<int> accepted;
    for (int i = 0; i < clusters; ++i) {
      if (results[i].value > 0.0) accepted.push_back(i);
    }
    // Reject power increases that would lower another cluster's ratio or break its constraints.
    Snapshot next;
    Eigen::MatrixXd proposal;
    for (;;) {
      proposal = st.beta;
      for (int i : accepted) proposal.row(i) = results[i].beta.transpose();
      next = snapshot(links, proposal, caps, config);
      if (accepted.empty() || (next.feasible && (next.rho.array() >= cur.rho.array()).all())) break;
      int worst = -1;
      double worst_increase = 0.0;
      for (int i : accepted) {
        const double inc = cur.models[i].transmit_power(results[i].beta) -
                           cur.models[i].transmit_power(st.beta.row(i).transpose());
        if (inc > worst_increase) {
          worst_increase = inc;
          worst = i;
        }
      }
      if (worst < 0) {
        accepted.clear();
        continue;
      }
      caps(worst) = cur.models[worst].transmit_power(st.beta.row(worst).transpose());
      accepted.erase(std::find(accepted.begin(), accepted.end(), worst));
    }
    st.beta = proposal;
    cur = snapshot(links, st.beta, caps, config);
    st.trace.push_back({l, cur.rho, cur.rho.sum(), residual});
  }
  st.rho = cur.rho;
  return st;
}

}  // namespace irsnoma
