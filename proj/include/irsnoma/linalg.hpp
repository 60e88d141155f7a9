// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include <Eigen/Dense>

namespace irsnoma {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using CRowVector = Eigen::Matrix<std::complex<Scalar>, 1, Eigen::Dynamic>;

template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

// The simulator itself runs in double precision.
using cdouble = std::complex<double>;
using CVectord = CVector<double>;
using CRowVectord = CRowVector<double>;
using CMatrixd = CMatrix<double>;

/// Real part of tr(A B) for square complex matrices, without forming A*B.
template <typename DerivedA, typename DerivedB>
typename DerivedA::RealScalar trace_product(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  // tr(AB) = sum_ij A_ij B_ji
  return (a.array() * b.transpose().array()).real().sum();
}

/// Makes a square matrix exactly Hermitian.
template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  m = (0.5 * (m + m.adjoint())).eval();
}

}  // namespace irsnoma
