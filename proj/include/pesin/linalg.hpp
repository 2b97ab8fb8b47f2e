#pragma once

// Small dense linear-algebra helpers shared by the cocycle, metric and
// holonomy code. Everything here works on column bases of subspaces: a
// subspace of R^d is passed as any d x p matrix whose columns span it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "pesin/common.hpp"

namespace pesin {

template <typename Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Orthonormal basis for the column span of `basis` (Householder, thin Q).
template <typename Derived>
DynMatrix<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& basis) {
  using Scalar = typename Derived::Scalar;
  const Index rows = basis.rows();
  const Index cols = basis.cols();
  Eigen::HouseholderQR<DynMatrix<Scalar>> qr(basis.eval());
  DynMatrix<Scalar> q = qr.householderQ() * DynMatrix<Scalar>::Identity(rows, cols);
  // Fix the orientation so that repeated calls on the same span agree.
  const DynMatrix<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j) {
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  }
  return q;
}

/// Orthonormal basis of the orthogonal complement of span(basis).
template <typename Derived>
DynMatrix<typename Derived::Scalar> orthogonal_complement(const Eigen::MatrixBase<Derived>& basis) {
  using Scalar = typename Derived::Scalar;
  const Index rows = basis.rows();
  const Index cols = basis.cols();
  Eigen::HouseholderQR<DynMatrix<Scalar>> qr(basis.eval());
  DynMatrix<Scalar> full = qr.householderQ() * DynMatrix<Scalar>::Identity(rows, rows);
  return full.rightCols(rows - cols);
}

/// Cosines of the principal angles between span(e) and span(f), descending.
template <typename DerivedE, typename DerivedF>
Eigen::Matrix<typename DerivedE::Scalar, Eigen::Dynamic, 1> principal_cosines(
    const Eigen::MatrixBase<DerivedE>& e, const Eigen::MatrixBase<DerivedF>& f) {
  const auto qe = orthonormalize(e);
  const auto qf = orthonormalize(f);
  Eigen::JacobiSVD<DynMatrix<typename DerivedE::Scalar>> svd(qe.transpose() * qf);
  return svd.singularValues().cwiseMin(1.0);
}

/// Angle between two subspaces: the infimum of arccos<u, v> over unit u in E,
/// v in F, i.e. the smallest principal angle.
template <typename DerivedE, typename DerivedF>
typename DerivedE::Scalar subspace_angle(const Eigen::MatrixBase<DerivedE>& e,
                                         const Eigen::MatrixBase<DerivedF>& f) {
  if (e.cols() == 0 || f.cols() == 0) fail(ErrorKind::Domain, "subspace_angle: zero-dimensional subspace");
  if (e.rows() != f.rows()) fail(ErrorKind::Domain, "subspace_angle: ambient dimension mismatch");
  const auto cosines = principal_cosines(e, f);
  const typename DerivedE::Scalar c = cosines.size() > 0 ? cosines(0) : 0.0;
  // acos loses half the digits near 1; recover the small angle from the sine.
  if (c > 0.9) {
    const auto qe = orthonormalize(e);
    const auto qf = orthonormalize(f);
    const DynMatrix<typename DerivedE::Scalar> residual = qf - qe * (qe.transpose() * qf);
    Eigen::JacobiSVD<DynMatrix<typename DerivedE::Scalar>> svd(residual);
    const auto s = svd.singularValues();
    const auto smallest = s.size() > 0 ? s(s.size() - 1) : 0.0;
    return std::asin(std::min<typename DerivedE::Scalar>(smallest, 1.0));
  }
  return std::acos(c);
}

/// Aperture sup_{|u|=1, u in E1} dist(u, E2) in the Euclidean norm.
template <typename DerivedE, typename DerivedF>
typename DerivedE::Scalar aperture(const Eigen::MatrixBase<DerivedE>& e1,
                                   const Eigen::MatrixBase<DerivedF>& e2) {
  if (e1.rows() != e2.rows() || e1.cols() != e2.cols())
    fail(ErrorKind::Domain, "aperture: subspaces must have equal dimension");
  const auto q1 = orthonormalize(e1);
  const auto q2 = orthonormalize(e2);
  const DynMatrix<typename DerivedE::Scalar> residual = q1 - q2 * (q2.transpose() * q1);
  Eigen::JacobiSVD<DynMatrix<typename DerivedE::Scalar>> svd(residual);
  return svd.singularValues()(0);
}

/// Volume expansion of `a` restricted to span(e1): the product of the
/// singular values of `a` applied to an orthonormal basis of e1.
template <typename DerivedA, typename DerivedE>
typename DerivedA::Scalar restricted_det(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedE>& e1) {
  if (e1.cols() == 0) fail(ErrorKind::Domain, "restricted_det: empty subspace");
  const auto q = orthonormalize(e1);
  Eigen::JacobiSVD<DynMatrix<typename DerivedA::Scalar>> svd(a * q);
  return svd.singularValues().prod();
}

/// Spectral norm.
template <typename Derived>
typename Derived::Scalar op_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<DynMatrix<typename Derived::Scalar>> svd(m.eval());
  return svd.singularValues()(0);
}

template <typename Derived>
typename Derived::Scalar min_singular_value(const Eigen::MatrixBase<Derived>& m) {
  Eigen::JacobiSVD<DynMatrix<typename Derived::Scalar>> svd(m.eval());
  const auto s = svd.singularValues();
  return s(s.size() - 1);
}

/// QL factorisation m = q * l with l lower triangular and diag(l) >= 0.
/// The trailing columns of q track the fastest-growing directions, so
/// repeated QL steps on a cocycle yield exponents in ascending order.
template <typename Derived>
void ql_decompose(const Eigen::MatrixBase<Derived>& m, DynMatrix<typename Derived::Scalar>& q,
                  DynMatrix<typename Derived::Scalar>& l) {
  using Scalar = typename Derived::Scalar;
  const Index n = m.rows();
  const DynMatrix<Scalar> flipped = m.eval().colwise().reverse().rowwise().reverse();
  Eigen::HouseholderQR<DynMatrix<Scalar>> qr(flipped);
  DynMatrix<Scalar> qf = qr.householderQ() * DynMatrix<Scalar>::Identity(n, n);
  DynMatrix<Scalar> rf = qr.matrixQR().template triangularView<Eigen::Upper>();
  q = qf.colwise().reverse().rowwise().reverse();
  l = rf.colwise().reverse().rowwise().reverse();
  for (Index j = 0; j < n; ++j) {
    if (l(j, j) < Scalar(0)) {
      q.col(j) = -q.col(j);
      l.row(j) = -l.row(j);
    }
  }
}

}  // namespace pesin
