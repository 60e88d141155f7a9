// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "irsnoma/linalg.hpp"

namespace irsnoma {

/// Hermitian matrix held as V diag(d) V^H.
struct LowRankHermitian {
  CMatrixd basis;          // N x r
  Eigen::VectorXd weights; // r

  /// Eigen-factors a dense Hermitian matrix, dropping eigenvalues below rel_cut * max|eig|.
  static LowRankHermitian from_dense(const CMatrixd& m, double rel_cut = 1e-13);
  /// w * v v^H
  static LowRankHermitian outer(const CVectord& v, double w = 1.0);

  Eigen::Index dimension() const { return basis.rows(); }
  Eigen::Index rank() const { return basis.cols(); }
  CMatrixd dense() const;
  /// Re tr(A X) for Hermitian X.
  double inner(const CMatrixd& x) const;
  /// Sum of |d_a| ||v_a||^2, an upper bound on |Re tr(A X)| over ||X||_2 <= 1.
  double nuclear_norm() const;
};

/// Re tr(A B) >= bound.
struct LinearConstraint {
  LowRankHermitian matrix;
  double bound = 0.0;
};

/// weight * log(Re tr(G B) + offset), weight >= 0.
struct LogTerm {
  double weight = 0.0;
  LowRankHermitian matrix;
  double offset = 0.0;
};

/// maximize Re tr(C B) + sum_q w_q log(Re tr(G_q B) + g_q)
/// subject to Re tr(A_m B) >= c_m, B_nn <= 1, B Hermitian PSD.
struct SdpProblem {
  CMatrixd objective;
  std::vector<LinearConstraint> constraints;
  std::vector<LogTerm> log_terms;

  Eigen::Index dimension() const { return objective.rows(); }
  double objective_value(const CMatrixd& b) const;
  /// Smallest constraint slack Re tr(A_m B) - c_m (infinity without constraints).
  double min_slack(const CMatrixd& b) const;
};

struct SdpOptions {
  double tolerance = 1e-6;      // relative duality-gap bound
  int max_newton_steps = 600;   // total across phases
  double barrier_growth = 10.0;
};

enum class SdpStatus { Optimal, MaxIterations, Infeasible, NumericalError };

const char* to_string(SdpStatus status);

struct SdpResult {
  CMatrixd solution;
  SdpStatus status = SdpStatus::NumericalError;
  double objective = 0.0;
  double gap_bound = 0.0;  // nu / t at exit
  int newton_steps = 0;
  std::vector<double> central_path;  // objective after each centering
};

/// Primal log-barrier path following with Newton steps and backtracking. Starts from
/// `start` when it is strictly feasible, otherwise from a phase-I point.
SdpResult solve(const SdpProblem& problem, const SdpOptions& options = {}, const CMatrixd* start = nullptr);

}  // namespace irsnoma
