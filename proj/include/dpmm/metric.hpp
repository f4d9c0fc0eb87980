#pragma once

#include "dpmm/params.hpp"
#include "dpmm/types.hpp"

namespace dpmm {

/// Full primal-dual point xi = (x, Y, Z). Y is m x (p+q) with agent i in row
/// i; Z is r x (p+q) where r is the row count of the mixing factor U.
struct XiPoint {
  BlockVec x;
  Mat y;
  Mat z;

  XiPoint operator-(const XiPoint& other) const;
  XiPoint operator+(const XiPoint& other) const;
  XiPoint operator*(double s) const;
};

/// U with L = U^T U, built from the eigenpairs of L above `rel_tol * lambda_max`.
/// Rows are sqrt(sigma_k) v_k^T, so U has full row rank and U 1 = 0.
Mat mixing_factor(const Mat& mixing, double rel_tol = 1e-10);

/// Z-coordinates of Lambda: the least-squares solution of U^T Z = Lambda.
Mat lift_to_z(const Mat& factor, const Mat& lambda);

// Block arithmetic. Kronecker factors act on the rows of Y and Z.
XiPoint apply_H(const MetricMatrices& metrics, const XiPoint& xi);
XiPoint apply_D(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi);
XiPoint apply_Q(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi);
XiPoint apply_M(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi);

double h_norm_sq(const MetricMatrices& metrics, const XiPoint& xi);
double d_norm_sq(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi);
double inner(const XiPoint& a, const XiPoint& b);

/// Stacks (x_1..x_m, y_1..y_m, z_1..z_r) into one vector.
Vec flatten(const XiPoint& xi);
XiPoint unflatten(const Vec& v, const std::vector<int>& dims, int agents, int factor_rows, int multiplier_dim);

// Dense matrices with the same ordering as flatten(). Only for small instances.
Mat dense_H(const MetricMatrices& metrics, int factor_rows);
Mat dense_D(const MetricMatrices& metrics, const Mat& factor);
Mat dense_Q(const MetricMatrices& metrics, const Mat& factor);
Mat dense_M(const MetricMatrices& metrics, const Mat& factor);

/// Computable constants of the linear-rate bound.
struct MetricConstants {
  double c1 = 0.0;  ///< sqrt(lambda_max(Q^T Q) / lambda_min(D))
  double c2 = 0.0;  ///< sqrt(lambda_max(H))
  double c3 = 0.0;  ///< sqrt(lambda_min(D))
  double c4 = 0.0;  ///< sqrt(lambda_max(M^T H M)) / sqrt(lambda_min(H))
  double omega = 0.0;  ///< 1 + c2 c4 / c3
};

MetricConstants metric_constants(const MetricMatrices& metrics, const Mat& factor);

}  // namespace dpmm
