// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/conic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace irsnoma {

namespace {

constexpr double kArmijo = 0.01;
constexpr double kCenteringTol = 1e-6;  // on lambda^2 / 2, above the round-off floor of the decrement
constexpr double kMinStep = 1e-14;
constexpr double kQuadraticRegion = 0.25;  // lambda^2
constexpr int kMaxCenteringSteps = 80;
constexpr double kDecrementLimit = 1e6;
// Inside the quadratic region the decrement bottoms out at a round-off floor that grows
// with t. A stage whose best decrement has not halved for this many steps counts as centered.
constexpr int kStallSteps = 4;
constexpr double kPhaseOneCap = 1.0;

// Re tr(X Y) for Hermitian Y.
double hinner(const CMatrixd& x, const CMatrixd& y) { return (x.array() * y.conjugate().array()).real().sum(); }

void add_low_rank(CMatrixd& m, const LowRankHermitian& a, double scale) {
  m.noalias() += a.basis * (scale * a.weights).asDiagonal() * a.basis.adjoint();
}

struct Factor {
  const LowRankHermitian* matrix;
  double coef;
};

// Applies (K + sum_r c_r a_r a_r^T)^{-1} where K[X] = B^{-1} X B^{-1} on Hermitian
// matrices and the a_r are low-rank or diagonal-indicator matrices (Woodbury).
class NewtonSystem {
 public:
  NewtonSystem(const CMatrixd& b, const std::vector<Factor>& factors, const Eigen::VectorXd& diag_coef)
      : b_(b), factors_(factors) {
    const Eigen::Index n = b.rows();
    const Eigen::Index f = static_cast<Eigen::Index>(factors.size());
    const Eigen::Index r = f + n;
    w_.reserve(factors.size());
    for (const auto& fac : factors) w_.push_back(b * fac.matrix->basis);

    Eigen::MatrixXd m(r, r);
    for (Eigen::Index p = 0; p < f; ++p) {
      const auto& dp = factors[p].matrix->weights;
      for (Eigen::Index q = p; q < f; ++q) {
        const Eigen::MatrixXd cross = (factors[p].matrix->basis.adjoint() * w_[q]).cwiseAbs2();
        m(p, q) = m(q, p) = dp.dot(cross * factors[q].matrix->weights);
      }
      const Eigen::VectorXd col = w_[p].cwiseAbs2() * dp;
      m.block(f, p, n, 1) = col;
      m.block(p, f, 1, n) = col.transpose();
    }
    m.bottomRightCorner(n, n) = b.cwiseAbs2();

    scale_.resize(r);
    for (Eigen::Index p = 0; p < f; ++p) scale_(p) = std::sqrt(factors[p].coef);
    scale_.tail(n) = diag_coef.cwiseSqrt();
    Eigen::MatrixXd g = scale_.asDiagonal() * m * scale_.asDiagonal();
    g.diagonal().array() += 1.0;
    gram_.compute(g);
    ok_ = gram_.info() == Eigen::Success;
  }

  bool ok() const { return ok_; }

  struct Direction {
    CMatrixd x;
    double trace_inv = 0.0;  // Re tr(B^{-1} X)
  };

  // X = H^{-1}(iota B^{-1} + rhs). The B^{-1} part is carried analytically (K^{-1} B^{-1} = B)
  // so an ill-conditioned B never gets inverted.
  Direction apply_inverse(const CMatrixd& rhs, double iota = 0.0) const {
    const Eigen::Index n = b_.rows();
    const Eigen::Index f = static_cast<Eigen::Index>(factors_.size());
    Eigen::VectorXd h(f + n);
    for (Eigen::Index p = 0; p < f; ++p) {
      const auto& fac = *factors_[p].matrix;
      const CMatrixd rw = rhs * w_[p];
      const Eigen::VectorXd quad = (w_[p].conjugate().array() * rw.array()).real().colwise().sum().transpose();
      const Eigen::VectorXd own = (fac.basis.conjugate().array() * w_[p].array()).real().colwise().sum().transpose();
      h(p) = (quad + iota * own).dot(fac.weights);
    }
    CMatrixd rb = rhs * b_;
    h.tail(n) = (b_.array() * rb.transpose().array()).real().rowwise().sum() + iota * b_.diagonal().real().array();

    const Eigen::VectorXd y = scale_.asDiagonal() * gram_.solve(scale_.asDiagonal() * h);
    // (rhs - sum_r y_r a_r) B, using V_r^H B = W_r^H.
    for (Eigen::Index p = 0; p < f; ++p) {
      const auto& fac = *factors_[p].matrix;
      rb.noalias() -= fac.basis * (y(p) * fac.weights).asDiagonal() * w_[p].adjoint();
    }
    rb -= y.tail(n).asDiagonal() * b_;
    Direction d;
    d.trace_inv = iota * double(n) + rb.trace().real();
    d.x = b_ * rb;
    if (iota != 0.0) d.x += iota * b_;
    symmetrize(d.x);
    return d;
  }

 private:
  const CMatrixd& b_;
  const std::vector<Factor>& factors_;
  std::vector<CMatrixd> w_;
  Eigen::VectorXd scale_;
  Eigen::LLT<Eigen::MatrixXd> gram_;
  bool ok_ = false;
};

std::optional<double> log_det(const CMatrixd& b) {
  Eigen::LLT<CMatrixd> llt(b);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd d = llt.matrixLLT().diagonal().real();
  if ((d.array() <= 0.0).any()) return std::nullopt;
  return 2.0 * d.array().log().sum();
}

// One barrier subproblem family. Phase I adds the scalar s and maximizes it subject to
// Re tr(A_m B) - c_m - s n_m > 0, ignoring the objective.
class Barrier {
 public:
  Barrier(const SdpProblem& p, bool phase_one) : p_(p), phase_one_(phase_one) {
    const Eigen::Index m = static_cast<Eigen::Index>(p.constraints.size());
    norm_.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) norm_(j) = std::max(1e-300, p.constraints[j].matrix.nuclear_norm());
  }

  double nu() const {
    return 2.0 * double(p_.dimension()) + double(p_.constraints.size()) + (phase_one_ ? 1.0 : 0.0);
  }

  // Value of the barrier-augmented objective; nullopt outside the domain.
  std::optional<double> value(const CMatrixd& b, double s, double t) const {
    const auto ld = log_det(b);
    if (!ld) return std::nullopt;
    double v = *ld;
    for (std::size_t j = 0; j < p_.constraints.size(); ++j) {
      const double l = slack(j, b, s);
      if (!(l > 0.0)) return std::nullopt;
      v += std::log(l);
    }
    for (Eigen::Index n = 0; n < b.rows(); ++n) {
      const double d = 1.0 - b(n, n).real();
      if (!(d > 0.0)) return std::nullopt;
      v += std::log(d);
    }
    if (phase_one_) {
      if (!(kPhaseOneCap - s > 0.0)) return std::nullopt;
      return v + std::log(kPhaseOneCap - s) + t * s;
    }
    for (const auto& q : p_.log_terms) {
      if (!(q.matrix.inner(b) + q.offset > 0.0)) return std::nullopt;
    }
    return v + t * p_.objective_value(b);
  }

  double slack(std::size_t j, const CMatrixd& b, double s) const {
    const auto& c = p_.constraints[j];
    return c.matrix.inner(b) - c.bound - (phase_one_ ? s * norm_(static_cast<Eigen::Index>(j)) : 0.0);
  }

  double norm(std::size_t j) const { return norm_(static_cast<Eigen::Index>(j)); }

  // Barrier weight whose centering target is closest to `b`: minimizes the Newton
  // decrement of t f + barrier at b, with the log-term curvature ignored.
  std::optional<double> centering_weight(const CMatrixd& b) const {
    const Eigen::Index n = b.rows();
    CMatrixd barrier_rest = CMatrixd::Zero(n, n);  // barrier gradient minus B^{-1}
    std::vector<Factor> factors;
    for (std::size_t j = 0; j < p_.constraints.size(); ++j) {
      const double l = slack(j, b, 0.0);
      add_low_rank(barrier_rest, p_.constraints[j].matrix, 1.0 / l);
      factors.push_back({&p_.constraints[j].matrix, 1.0 / (l * l)});
    }
    const Eigen::VectorXd diag_slack = 1.0 - b.diagonal().real().array();
    barrier_rest.diagonal().array() -= diag_slack.cwiseInverse().array();
    CMatrixd objective_grad = p_.objective;
    for (const auto& q : p_.log_terms) add_low_rank(objective_grad, q.matrix, q.weight / (q.matrix.inner(b) + q.offset));

    const NewtonSystem sys(b, factors, diag_slack.array().square().inverse());
    if (!sys.ok()) return std::nullopt;
    const auto d = sys.apply_inverse(objective_grad);
    const double a = hinner(objective_grad, d.x);
    const double c = d.trace_inv + hinner(barrier_rest, d.x);
    if (!(a > 0.0) || !(c < 0.0) || !std::isfinite(c / a)) return std::nullopt;
    return -c / a;
  }

  // One damped Newton step. Returns lambda^2 (Newton decrement squared) or nullopt on failure.
  std::optional<double> step(CMatrixd& b, double& s, double t) const {
    const Eigen::Index n = b.rows();
    // Gradient is B^{-1} + grad (the inverse is never formed).
    CMatrixd grad = CMatrixd::Zero(n, n);

    std::vector<Factor> factors;
    factors.reserve(p_.constraints.size() + p_.log_terms.size());
    Eigen::VectorXd slacks(static_cast<Eigen::Index>(p_.constraints.size()));
    for (std::size_t j = 0; j < p_.constraints.size(); ++j) {
      const double l = slack(j, b, s);
      slacks(static_cast<Eigen::Index>(j)) = l;
      add_low_rank(grad, p_.constraints[j].matrix, 1.0 / l);
      factors.push_back({&p_.constraints[j].matrix, 1.0 / (l * l)});
    }
    if (!phase_one_) {
      grad += t * p_.objective;
      for (const auto& q : p_.log_terms) {
        const double arg = q.matrix.inner(b) + q.offset;
        add_low_rank(grad, q.matrix, t * q.weight / arg);
        if (q.weight > 0.0) factors.push_back({&q.matrix, t * q.weight / (arg * arg)});
      }
    }
    const Eigen::VectorXd diag_slack = 1.0 - b.diagonal().real().array();
    grad.diagonal().array() -= diag_slack.cwiseInverse().array();

    const NewtonSystem sys(b, factors, diag_slack.array().square().inverse());
    if (!sys.ok()) return std::nullopt;
    const auto d0 = sys.apply_inverse(grad, 1.0);
    CMatrixd x = d0.x;
    double sigma = 0.0;
    double lambda2 = d0.trace_inv + hinner(grad, x);
    if (phase_one_) {
      CMatrixd cross = CMatrixd::Zero(n, n);
      double grad_s = t - 1.0 / (kPhaseOneCap - s);
      double h_ss = 1.0 / ((kPhaseOneCap - s) * (kPhaseOneCap - s));
      for (std::size_t j = 0; j < p_.constraints.size(); ++j) {
        const double l = slacks(static_cast<Eigen::Index>(j));
        const double nm = norm(j);
        add_low_rank(cross, p_.constraints[j].matrix, -nm / (l * l));
        grad_s -= nm / l;
        h_ss += nm * nm / (l * l);
      }
      const auto dy = sys.apply_inverse(cross);
      sigma = (grad_s - hinner(cross, x)) / (h_ss - hinner(cross, dy.x));
      x -= sigma * dy.x;
      lambda2 = (d0.trace_inv - sigma * dy.trace_inv) + hinner(grad, x) + grad_s * sigma;
    }
    if (!std::isfinite(lambda2)) return std::nullopt;
    if (lambda2 / 2.0 <= kCenteringTol) return lambda2;

    // Largest step keeping the affine slacks positive.
    double alpha = 1.0;
    for (std::size_t j = 0; j < p_.constraints.size(); ++j) {
      const double rate = p_.constraints[j].matrix.inner(x) - (phase_one_ ? sigma * norm(j) : 0.0);
      if (rate < 0.0) alpha = std::min(alpha, 0.99 * slacks(static_cast<Eigen::Index>(j)) / -rate);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const double rate = x(k, k).real();
      if (rate > 0.0) alpha = std::min(alpha, 0.99 * diag_slack(k) / rate);
    }
    if (phase_one_ && sigma > 0.0) alpha = std::min(alpha, 0.99 * (kPhaseOneCap - s) / sigma);

    const auto v0 = value(b, s, t);
    if (!v0) return std::nullopt;
    for (; alpha >= kMinStep; alpha *= 0.5) {
      CMatrixd trial = b + alpha * x;
      symmetrize(trial);
      const auto v = value(trial, s + alpha * sigma, t);
      // Inside the quadratic region the full step is safe and the Armijo test is
      // below double precision once t |f| is large.
      if (v && (lambda2 < kQuadraticRegion || *v >= *v0 + kArmijo * alpha * lambda2)) {
        b = std::move(trial);
        s += alpha * sigma;
        return lambda2;
      }
    }
    return std::nullopt;
  }

 private:
  const SdpProblem& p_;
  bool phase_one_;
  Eigen::VectorXd norm_;
};

bool strictly_feasible(const SdpProblem& p, const CMatrixd& b) {
  if (!log_det(b)) return false;
  if ((b.diagonal().real().array() >= 1.0).any()) return false;
  for (const auto& q : p.log_terms) {
    if (!(q.matrix.inner(b) + q.offset > 0.0)) return false;
  }
  return p.min_slack(b) > 0.0;
}

}  // namespace

LowRankHermitian LowRankHermitian::from_dense(const CMatrixd& m, double rel_cut) {
  Eigen::SelfAdjointEigenSolver<CMatrixd> eig(m);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cut = rel_cut * std::max(1e-300, ev.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (std::abs(ev(k)) > cut) keep.push_back(k);
  }
  LowRankHermitian out;
  out.basis.resize(m.rows(), static_cast<Eigen::Index>(keep.size()));
  out.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.basis.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(keep[c]);
    out.weights(static_cast<Eigen::Index>(c)) = ev(keep[c]);
  }
  return out;
}

LowRankHermitian LowRankHermitian::outer(const CVectord& v, double w) {
  LowRankHermitian out;
  out.basis = v;
  out.weights = Eigen::VectorXd::Constant(1, w);
  return out;
}

CMatrixd LowRankHermitian::dense() const { return basis * weights.asDiagonal() * basis.adjoint(); }

double LowRankHermitian::inner(const CMatrixd& x) const {
  const CMatrixd xv = x * basis;
  return (basis.conjugate().array() * xv.array()).real().colwise().sum().matrix().dot(weights);
}

double LowRankHermitian::nuclear_norm() const {
  return basis.colwise().squaredNorm().dot(weights.cwiseAbs());
}

double SdpProblem::objective_value(const CMatrixd& b) const {
  double v = hinner(b, objective);
  for (const auto& q : log_terms) v += q.weight * std::log(q.matrix.inner(b) + q.offset);
  return v;
}

double SdpProblem::min_slack(const CMatrixd& b) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : constraints) m = std::min(m, c.matrix.inner(b) - c.bound);
  return m;
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::MaxIterations: return "max-iterations";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::NumericalError: return "numerical-error";
  }
  return "unknown";
}

SdpResult solve(const SdpProblem& problem, const SdpOptions& options, const CMatrixd* start) {
  const Eigen::Index n = problem.dimension();
  SdpResult res;
  CMatrixd b = 0.5 * CMatrixd::Identity(n, n);
  if (start != nullptr && start->rows() == n && strictly_feasible(problem, *start)) {
    b = *start;
  } else if (start != nullptr && start->rows() == n && log_det(*start) &&
             (start->diagonal().real().array() < 1.0).all()) {
    b = *start;  // interior of the cone, linear constraints may still fail
  }
  symmetrize(b);

  if (!strictly_feasible(problem, b)) {
    const Barrier phase_one(problem, true);
    double s = -1.0;
    for (std::size_t j = 0; j < problem.constraints.size(); ++j) {
      s = std::min(s, phase_one.slack(j, b, 0.0) / phase_one.norm(j) - 1.0);
    }
    if (!std::isfinite(s)) {
      res.status = SdpStatus::NumericalError;
      res.solution = b;
      return res;
    }
    double t = 1.0;
    bool found = false;
    while (!found) {
      for (;;) {
        if (res.newton_steps >= options.max_newton_steps) {
          res.status = SdpStatus::MaxIterations;
          res.solution = b;
          return res;
        }
        ++res.newton_steps;
        const auto lambda2 = phase_one.step(b, s, t);
        if (s > 0.0 && strictly_feasible(problem, b)) {
          found = true;
          break;
        }
        if (!lambda2) {
          res.status = SdpStatus::NumericalError;
          res.solution = b;
          return res;
        }
        if (*lambda2 / 2.0 <= kCenteringTol) break;
      }
      if (found) break;
      if (s + phase_one.nu() / t < 0.0) {
        res.status = SdpStatus::Infeasible;
        res.solution = b;
        return res;
      }
      t *= options.barrier_growth;
    }
  }

  const Barrier barrier(problem, false);
  const double nu = barrier.nu();
  const double scale = 1.0 + std::abs(problem.objective_value(b));
  double t = nu / scale;
  if (const auto tc = barrier.centering_weight(b)) t = std::max(t, *tc);
  t = std::min(t, nu / (options.tolerance * scale));
  double s = 0.0;
  // Last centered iterate; a stage that cannot be completed falls back to it.
  std::optional<CMatrixd> centered_point;
  double centered_t = 0.0;
  res.status = SdpStatus::MaxIterations;
  for (;;) {
    bool centered = false;
    const int stage_start = res.newton_steps;
    double best = std::numeric_limits<double>::infinity();
    int stalled = 0;
    while (res.newton_steps < options.max_newton_steps && res.newton_steps - stage_start < kMaxCenteringSteps) {
      ++res.newton_steps;
      const auto lambda2 = barrier.step(b, s, t);
      if (!lambda2) break;
      // After a completed stage, a decrement far beyond what a t-update can produce
      // means the Newton system has lost precision.
      if (centered_point && *lambda2 > kDecrementLimit * nu * options.barrier_growth * options.barrier_growth) break;
      if (*lambda2 / 2.0 <= kCenteringTol) {
        centered = true;
        break;
      }
      if (*lambda2 < 0.5 * best) {
        best = *lambda2;
        stalled = 0;
      } else if (*lambda2 < kQuadraticRegion && ++stalled >= kStallSteps) {
        centered = true;
        break;
      }
    }
    if (!centered) {
      if (centered_point) {
        b = *centered_point;
        const double obj = problem.objective_value(b);
        res.gap_bound = nu / centered_t;
        res.status = res.gap_bound <= options.tolerance * (1.0 + std::abs(obj)) ? SdpStatus::Optimal
                     : res.newton_steps >= options.max_newton_steps           ? SdpStatus::MaxIterations
                                                                               : SdpStatus::NumericalError;
      } else {
        res.gap_bound = std::numeric_limits<double>::infinity();
        res.status = res.newton_steps >= options.max_newton_steps ? SdpStatus::MaxIterations
                                                                  : SdpStatus::NumericalError;
      }
      break;
    }
    const double obj = problem.objective_value(b);
    res.central_path.push_back(obj);
    res.gap_bound = nu / t;
    centered_point = b;
    centered_t = t;
    if (res.gap_bound <= options.tolerance * (1.0 + std::abs(obj))) {
      res.status = SdpStatus::Optimal;
      break;
    }
    t *= options.barrier_growth;
  }
  res.solution = b;
  res.objective = problem.objective_value(b);
  return res;
}

}  // namespace irsnoma
