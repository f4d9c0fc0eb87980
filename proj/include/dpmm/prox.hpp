#pragma once

// Closed-form proximal and projection primitives shared by every solver.
// All of them are elementwise, so they accept any Eigen expression and are
// templated on its scalar type.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace dpmm {

/// Soft-thresholding: the proximal map of weight * ||.||_1.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> prox_l1(
    const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar weight) {
  using Scalar = typename Derived::Scalar;
  if (weight < Scalar(0)) throw std::invalid_argument("prox_l1: negative weight");
  return v.unaryExpr([weight](Scalar t) {
    const Scalar mag = std::abs(t) - weight;
    return mag > Scalar(0) ? std::copysign(mag, t) : Scalar(0);
  });
}

/// Euclidean projection onto the box [lower, upper]; bounds may be infinite.
template <typename DV, typename DL, typename DU>
Eigen::Matrix<typename DV::Scalar, Eigen::Dynamic, 1> project_box(
    const Eigen::MatrixBase<DV>& v, const Eigen::MatrixBase<DL>& lower,
    const Eigen::MatrixBase<DU>& upper) {
  if (v.size() != lower.size() || v.size() != upper.size())
    throw std::invalid_argument("project_box: dimension mismatch");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("project_box: lower bound exceeds upper bound");
  return v.cwiseMax(lower).cwiseMin(upper);
}

/// Projection onto the polar cone R^p x R^q_+: the first p entries pass
/// through, the trailing q entries are clamped at zero from below.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_polar_cone(
    const Eigen::MatrixBase<Derived>& v, int p, int q) {
  using Scalar = typename Derived::Scalar;
  if (v.size() != p + q) throw std::invalid_argument("project_polar_cone: dimension mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = v;
  out.tail(q) = out.tail(q).cwiseMax(Scalar(0));
  return out;
}

}  // namespace dpmm
