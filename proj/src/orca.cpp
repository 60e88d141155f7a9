// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/orca.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace irsnoma {

namespace {

// Low-rank matrix sum_a w_a v_a v_a^H, skipping zero weights.
LowRankHermitian combine(const std::vector<CVectord>& vectors, const std::vector<double>& weights, Eigen::Index n) {
  std::vector<Eigen::Index> keep;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (weights[a] != 0.0) keep.push_back(static_cast<Eigen::Index>(a));
  }
  LowRankHermitian out;
  out.basis.resize(n, static_cast<Eigen::Index>(keep.size()));
  out.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.basis.col(static_cast<Eigen::Index>(c)) = vectors[keep[c]];
    out.weights(static_cast<Eigen::Index>(c)) = weights[keep[c]];
  }
  return out;
}

CVectord unit_phases(const CVectord& v) {
  CVectord b(v.size());
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    const double mag = std::abs(v(n));
    b(n) = mag > 0.0 ? v(n) / mag : cdouble(1.0, 0.0);
  }
  return b;
}

struct Evaluation {
  double energy_efficiency = 0.0;
  bool feasible = false;
  SystemMetrics metrics;
};

SystemConfig with_target(const SystemConfig& config, double sinr_target) {
  SystemConfig c = config;
  c.min_sinr = sinr_target;
  return c;
}

Evaluation evaluate(const LinkGains& links, const Eigen::MatrixXd& beta, const SystemConfig& target_config) {
  Evaluation e;
  e.metrics = evaluate_system(links, beta, target_config);
  e.energy_efficiency = e.metrics.energy_efficiency;
  e.feasible = e.metrics.feasible();
  return e;
}

// Re tr(B v v^H) for every omega, in the layout of LinkGains.
template <typename Quadratic>
LinkGains gains_from(const LiftedSystem& lifted, const LinkGains& decode_order, Quadratic&& quad) {
  LinkGains links;
  const int clusters = lifted.num_clusters();
  const int k_count = lifted.users_per_cluster();
  links.beam_norm_sq = decode_order.beam_norm_sq;
  links.channel_norm_sq = decode_order.channel_norm_sq;
  for (int i = 0; i < clusters; ++i) {
    Eigen::MatrixXd g(k_count, clusters);
    for (int k = 0; k < k_count; ++k) {
      for (int j = 0; j < clusters; ++j) g(k, j) = quad(lifted.omega[i][k][j]);
    }
    links.gain.push_back(std::move(g));
  }
  return links;
}

SdpProblem assemble(const LiftedSystem& lifted, const Eigen::MatrixXd& beta, double sinr_target,
                    const SystemConfig& config, const Eigen::VectorXd& beam_norm_sq, const CMatrixd& anchor,
                    const SystemMetrics& at_anchor, double penalty_factor) {
  const Eigen::Index n = lifted.dimension();
  const int clusters = lifted.num_clusters();
  const int k_count = lifted.users_per_cluster();
  const double scale = 1.0 / std::sqrt(config.noise_power);
  const double p = config.cluster_power;
  const Eigen::VectorXd beam_power = p * beta.rowwise().sum();

  SdpProblem prob;
  const RankOnePenalty pen = rank_one_penalty(anchor, anchor);
  prob.objective = -penalty_factor * (CMatrixd::Identity(n, n) - pen.leading * pen.leading.adjoint());

  for (int i = 0; i < clusters; ++i) {
    const double total_power = at_anchor.power(i);
    for (int k = 0; k < k_count; ++k) {
      const UserTerm ut = user_term(lifted, i, k, beta, p, config.noise_power);
      const DcTerms dc = dc_linearize(ut, anchor);
      const double g = at_anchor.sinr(i, k);
      const double weight = config.bandwidth * (g / (1.0 + g)) / total_power;  // per log2 unit
      prob.objective -= weight * dc.gradient;
      prob.log_terms.push_back({weight / std::numbers::ln2, ut.signal, 0.0});

      // S(B) / gamma - (D(B) - 1) >= 1
      const double stronger = beta.row(i).tail(k_count - k - 1).sum();
      std::vector<CVectord> vecs;
      std::vector<double> w;
      vecs.push_back(scale * lifted.omega[i][k][i]);
      w.push_back(p * beta(i, k) / sinr_target - p * stronger);
      for (int j = 0; j < clusters; ++j) {
        if (j == i) continue;
        vecs.push_back(scale * lifted.omega[i][k][j]);
        w.push_back(-beam_power(j));
      }
      prob.constraints.push_back({combine(vecs, w, n), 1.0});

      if (k + 1 < k_count) {
        // SIC gap on the next user, with beta fixed.
        const double coef = beam_norm_sq(i) * p * (beta(i, k) - stronger) / config.sic_power_gap;
        prob.constraints.push_back({LowRankHermitian::outer(lifted.omega[i][k + 1][i], coef), 1.0});
      }
    }
  }
  return prob;
}

}  // namespace

CMatrixd LiftedSystem::lifted(int cluster, int user) const {
  const CVectord& w = omega[cluster][user][cluster];
  return w * w.adjoint();
}

LiftedSystem lift_user_matrices(const ChannelSet& channels, const BeamformerSet& beamformers,
                                const ClusterPlan& plan) {
  if (plan.num_clusters() != beamformers.num_clusters()) {
    throw std::invalid_argument("lift_user_matrices: one beam per cluster required");
  }
  LiftedSystem out;
  for (const auto& cluster : plan.clusters) {
    std::vector<std::vector<CVectord>> users;
    for (int u : cluster) {
      std::vector<CVectord> per_beam;
      for (const auto& f : beamformers.beams) per_beam.push_back(channels.cascaded[u] * f);
      users.push_back(std::move(per_beam));
    }
    out.omega.push_back(std::move(users));
  }
  return out;
}

LinkGains lifted_link_gains(const LiftedSystem& lifted, const CMatrixd& b, const LinkGains& decode_order) {
  return gains_from(lifted, decode_order, [&](const CVectord& w) { return (w.adjoint() * b * w)(0).real(); });
}

LinkGains reflection_link_gains(const LiftedSystem& lifted, const CVectord& b, const LinkGains& decode_order) {
  return gains_from(lifted, decode_order, [&](const CVectord& w) { return std::norm(b.dot(w)); });
}

UserTerm user_term(const LiftedSystem& lifted, int cluster, int user, const Eigen::MatrixXd& beta,
                   double cluster_power, double noise_power) {
  const Eigen::Index n = lifted.dimension();
  const int clusters = lifted.num_clusters();
  const int k_count = lifted.users_per_cluster();
  const double scale = 1.0 / std::sqrt(noise_power);
  const auto& own = lifted.omega[cluster][user][cluster];

  UserTerm t;
  t.signal = LowRankHermitian::outer(scale * own, cluster_power * beta(cluster, user));
  std::vector<CVectord> vecs{scale * own};
  std::vector<double> w{cluster_power * beta.row(cluster).tail(k_count - user - 1).sum()};
  for (int j = 0; j < clusters; ++j) {
    if (j == cluster) continue;
    vecs.push_back(scale * lifted.omega[cluster][user][j]);
    w.push_back(cluster_power * beta.row(j).sum());
  }
  t.interference = combine(vecs, w, n);
  return t;
}

double DcTerms::f1(const CMatrixd& b) const { return std::log2(user.signal.inner(b)); }

double DcTerms::f2(const CMatrixd& b) const { return std::log2(user.interference.inner(b) + 1.0); }

double DcTerms::f2_bar(const CMatrixd& b) const {
  return f2_anchor + trace_product(gradient.adjoint(), CMatrixd(b - anchor));
}

DcTerms dc_linearize(const UserTerm& user, const CMatrixd& anchor) {
  const double d = user.interference.inner(anchor) + 1.0;
  if (!(d > 0.0) || !(user.signal.inner(anchor) > 0.0)) {
    throw std::domain_error("dc_linearize: nonpositive log argument at the anchor");
  }
  DcTerms t;
  t.user = user;
  t.anchor = anchor;
  t.f2_anchor = std::log2(d);
  t.gradient = user.interference.dense() / (d * std::numbers::ln2);
  return t;
}

RankOnePenalty rank_one_penalty(const CMatrixd& b, const CMatrixd& anchor) {
  Eigen::SelfAdjointEigenSolver<CMatrixd> eig_anchor(anchor);
  const Eigen::VectorXd& ev = eig_anchor.eigenvalues();
  const Eigen::Index top = std::abs(ev(0)) > std::abs(ev(ev.size() - 1)) ? 0 : ev.size() - 1;
  RankOnePenalty r;
  r.leading = eig_anchor.eigenvectors().col(top);
  const double anchor_norm = std::abs(ev(top));
  const double tr = b.trace().real();

  const Eigen::VectorXd eb = Eigen::SelfAdjointEigenSolver<CMatrixd>(b, Eigen::EigenvaluesOnly).eigenvalues();
  r.exact = tr - eb.cwiseAbs().maxCoeff();
  const double linear = (r.leading.adjoint() * (b - anchor) * r.leading)(0).real();
  r.surrogate = tr - (anchor_norm + linear);
  return r;
}

CVectord extract_reflection(const CMatrixd& b) {
  Eigen::SelfAdjointEigenSolver<CMatrixd> eig(b);
  const Eigen::Index top = b.rows() - 1;
  return unit_phases(eig.eigenvectors().col(top) * std::sqrt(std::max(0.0, eig.eigenvalues()(top))));
}

ReflectionState orca_iterate(const LiftedSystem& lifted, const LinkGains& decode_order, const Eigen::MatrixXd& beta,
                             double sinr_target, const SystemConfig& config, std::mt19937_64& rng) {
  const OrcaOptions& opt = config.orca;
  const Eigen::Index n = lifted.dimension();
  const SystemConfig target_config = with_target(config, sinr_target);
  auto evaluate_b = [&](const CVectord& b) {
    return evaluate(reflection_link_gains(lifted, b, decode_order), beta, target_config);
  };

  ReflectionState st;
  const CVectord b0 = CVectord::Ones(n);
  const Evaluation e0 = evaluate_b(b0);
  st.initial_energy_efficiency = e0.energy_efficiency;
  st.b = b0;
  st.energy_efficiency = e0.energy_efficiency;
  st.lift = b0 * b0.adjoint();
  st.penalty_factor = opt.penalty_initial;

  SdpOptions sdp_opt;
  sdp_opt.tolerance = opt.sdp_tolerance;

  CVectord best_b = b0;
  double best_ee = e0.energy_efficiency;
  auto consider = [&](const CVectord& b) {
    const Evaluation e = evaluate_b(b);
    if (e.feasible && e.energy_efficiency > best_ee) {
      best_ee = e.energy_efficiency;
      best_b = b;
    }
    return e;
  };

  // Convergence is judged on the incumbent, the EE Stage 2 returns. The lifted EE is
  // only physical once B is rank-one with a unit diagonal.
  double previous_ee = e0.energy_efficiency;
  bool last_extraction_feasible = true;
  for (int t = 1; t <= opt.max_iterations; ++t) {
    const Evaluation at_anchor = evaluate(lifted_link_gains(lifted, st.lift, decode_order), beta, target_config);
    // The first pass is the plain relaxation; it supplies a spread anchor for the penalty.
    const double eta = t == 1 ? 0.0 : st.penalty_factor;
    SdpProblem prob;
    try {
      prob = assemble(lifted, beta, sinr_target, config, decode_order.beam_norm_sq, st.lift, at_anchor.metrics, eta);
    } catch (const std::domain_error&) {
      st.last_status = SdpStatus::NumericalError;
      break;
    }
    // The previous solution is interior; the rank-one start needs spreading first.
    const CMatrixd start = t == 1 ? CMatrixd(0.98 * st.lift + 0.01 * CMatrixd::Identity(n, n)) : st.lift;
    const SdpResult res = solve(prob, sdp_opt, &start);
    st.last_status = res.status;
    if (res.status == SdpStatus::Infeasible || res.solution.rows() != n || prob.min_slack(res.solution) < 0.0) break;

    st.lift = res.solution;
    st.iterations = t;
    st.exact_penalty = rank_one_penalty(st.lift, st.lift).exact;
    const double lifted_ee =
        evaluate(lifted_link_gains(lifted, st.lift, decode_order), beta, target_config).energy_efficiency;
    last_extraction_feasible = consider(extract_reflection(st.lift)).feasible;
    const double ee = best_ee;
    st.trace.push_back({t, ee, lifted_ee, st.exact_penalty, eta});

    const bool rank_one = st.exact_penalty <= opt.penalty_tolerance * st.lift.trace().real();
    if (!rank_one && t > 1) st.penalty_factor = std::min(st.penalty_factor * opt.penalty_growth, opt.penalty_max);
    const bool settled = std::abs(ee - previous_ee) <= opt.tolerance * std::max(1.0, std::abs(ee));
    previous_ee = ee;
    if (settled && rank_one && t > 1) {
      st.converged = true;
      break;
    }
  }

  if (!last_extraction_feasible && st.iterations > 0) {
    Eigen::SelfAdjointEigenSolver<CMatrixd> eig(st.lift);
    const CMatrixd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
    for (int c = 0; c < opt.randomization_candidates; ++c) {
      CVectord z(n);
      for (Eigen::Index m = 0; m < n; ++m) z(m) = cdouble(normal(rng), normal(rng));
      consider(unit_phases(root * z));
    }
  }

  st.fallback = best_ee <= e0.energy_efficiency;
  st.b = st.fallback ? b0 : best_b;
  st.energy_efficiency = st.fallback ? e0.energy_efficiency : best_ee;
  return st;
}

}  // namespace irsnoma
