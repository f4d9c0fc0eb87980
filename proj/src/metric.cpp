#include "dpmm/metric.hpp"

#include <Eigen/Eigenvalues>
#include <numeric>
#include <stdexcept>

namespace dpmm {

XiPoint XiPoint::operator-(const XiPoint& o) const {
  XiPoint r{x, y - o.y, z - o.z};
  for (std::size_t i = 0; i < x.size(); ++i) r.x[i] -= o.x[i];
  return r;
}

XiPoint XiPoint::operator+(const XiPoint& o) const {
  XiPoint r{x, y + o.y, z + o.z};
  for (std::size_t i = 0; i < x.size(); ++i) r.x[i] += o.x[i];
  return r;
}

XiPoint XiPoint::operator*(double s) const {
  XiPoint r{x, y * s, z * s};
  for (auto& b : r.x) b *= s;
  return r;
}

Mat mixing_factor(const Mat& mixing, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(mixing);
  const Vec& vals = eig.eigenvalues();
  const double top = vals.size() ? vals.maxCoeff() : 0.0;
  std::vector<int> keep;
  for (int k = 0; k < vals.size(); ++k)
    if (vals(k) > rel_tol * top) keep.push_back(k);
  Mat u(keep.size(), mixing.rows());
  for (std::size_t r = 0; r < keep.size(); ++r)
    u.row(r) = std::sqrt(vals(keep[r])) * eig.eigenvectors().col(keep[r]).transpose();
  return u;
}

Mat lift_to_z(const Mat& factor, const Mat& lambda) {
  if (factor.rows() == 0) return Mat::Zero(0, lambda.cols());
  // U has full row rank: Z = (U U^T)^{-1} U Lambda.
  return (factor * factor.transpose()).ldlt().solve(factor * lambda);
}

namespace {

void require_shape(const MetricMatrices& metrics, const XiPoint& xi) {
  if (xi.x.size() != metrics.dims.size() || xi.y.rows() != static_cast<Eigen::Index>(metrics.dims.size()) ||
      xi.y.cols() != metrics.multiplier_dim || xi.z.cols() != metrics.multiplier_dim)
    throw std::invalid_argument("metric: point shape does not match the metric");
}

Mat gamma_rows(const MetricMatrices& metrics, const Mat& y) {
  Mat out = y;
  for (int i = 0; i < out.rows(); ++i) out.row(i) *= metrics.gamma[i];
  return out;
}

Mat inv_gamma_rows(const MetricMatrices& metrics, const Mat& y) {
  Mat out = y;
  for (int i = 0; i < out.rows(); ++i) out.row(i) /= metrics.gamma[i];
  return out;
}

}  // namespace

XiPoint apply_H(const MetricMatrices& metrics, const XiPoint& xi) {
  require_shape(metrics, xi);
  XiPoint out{xi.x, inv_gamma_rows(metrics, xi.y), xi.z / metrics.beta};
  for (std::size_t i = 0; i < xi.x.size(); ++i) out.x[i] /= metrics.alpha[i] * metrics.theta[i];
  return out;
}

XiPoint apply_D(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi) {
  require_shape(metrics, xi);
  XiPoint out{xi.x, inv_gamma_rows(metrics, xi.y),
              xi.z / metrics.beta - factor * gamma_rows(metrics, factor.transpose() * xi.z)};
  for (std::size_t i = 0; i < xi.x.size(); ++i) out.x[i] *= (2.0 - metrics.theta[i]) / metrics.alpha[i];
  return out;
}

XiPoint apply_Q(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi) {
  require_shape(metrics, xi);
  XiPoint out{xi.x, inv_gamma_rows(metrics, xi.y) - factor.transpose() * xi.z, xi.z / metrics.beta};
  for (std::size_t i = 0; i < xi.x.size(); ++i) out.x[i] /= metrics.alpha[i];
  return out;
}

XiPoint apply_M(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi) {
  require_shape(metrics, xi);
  XiPoint out{xi.x, xi.y - gamma_rows(metrics, factor.transpose() * xi.z), xi.z};
  for (std::size_t i = 0; i < xi.x.size(); ++i) out.x[i] *= metrics.theta[i];
  return out;
}

double inner(const XiPoint& a, const XiPoint& b) {
  double s = (a.y.array() * b.y.array()).sum() + (a.z.array() * b.z.array()).sum();
  for (std::size_t i = 0; i < a.x.size(); ++i) s += a.x[i].dot(b.x[i]);
  return s;
}

double h_norm_sq(const MetricMatrices& metrics, const XiPoint& xi) { return inner(xi, apply_H(metrics, xi)); }

double d_norm_sq(const MetricMatrices& metrics, const Mat& factor, const XiPoint& xi) {
  return inner(xi, apply_D(metrics, factor, xi));
}

Vec flatten(const XiPoint& xi) {
  int n = 0;
  for (const auto& b : xi.x) n += static_cast<int>(b.size());
  Vec out(n + xi.y.size() + xi.z.size());
  int at = 0;
  for (const auto& b : xi.x) {
    out.segment(at, b.size()) = b;
    at += static_cast<int>(b.size());
  }
  for (int i = 0; i < xi.y.rows(); ++i, at += xi.y.cols()) out.segment(at, xi.y.cols()) = xi.y.row(i).transpose();
  for (int i = 0; i < xi.z.rows(); ++i, at += xi.z.cols()) out.segment(at, xi.z.cols()) = xi.z.row(i).transpose();
  return out;
}

XiPoint unflatten(const Vec& v, const std::vector<int>& dims, int agents, int factor_rows, int multiplier_dim) {
  XiPoint xi{BlockVec(dims.size()), Mat(agents, multiplier_dim), Mat(factor_rows, multiplier_dim)};
  const int n = std::accumulate(dims.begin(), dims.end(), 0);
  if (v.size() != n + (agents + factor_rows) * multiplier_dim)
    throw std::invalid_argument("unflatten: vector length does not match the shape");
  int at = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    xi.x[i] = v.segment(at, dims[i]);
    at += dims[i];
  }
  for (int i = 0; i < agents; ++i, at += multiplier_dim) xi.y.row(i) = v.segment(at, multiplier_dim).transpose();
  for (int i = 0; i < factor_rows; ++i, at += multiplier_dim) xi.z.row(i) = v.segment(at, multiplier_dim).transpose();
  return xi;
}

namespace {

struct DenseLayout {
  int n = 0;  // primal block
  int ny = 0;
  int nz = 0;
  int total() const { return n + ny + nz; }
};

DenseLayout layout(const MetricMatrices& metrics, int factor_rows) {
  DenseLayout l;
  l.n = std::accumulate(metrics.dims.begin(), metrics.dims.end(), 0);
  l.ny = static_cast<int>(metrics.dims.size()) * metrics.multiplier_dim;
  l.nz = factor_rows * metrics.multiplier_dim;
  return l;
}

// diag over the primal block with per-agent value f(i).
template <class F>
void fill_primal_diag(Mat& out, const MetricMatrices& metrics, F&& f) {
  int at = 0;
  for (std::size_t i = 0; i < metrics.dims.size(); ++i)
    for (int j = 0; j < metrics.dims[i]; ++j, ++at) out(at, at) = f(i);
}

Mat kron_identity(const Mat& a, int d) {
  Mat out = Mat::Zero(a.rows() * d, a.cols() * d);
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out.block(r * d, c * d, d, d).diagonal().setConstant(a(r, c));
  return out;
}

Mat gamma_dense(const MetricMatrices& metrics, bool inverse) {
  const int d = metrics.multiplier_dim;
  const int m = static_cast<int>(metrics.gamma.size());
  Mat g = Mat::Zero(m * d, m * d);
  for (int i = 0; i < m; ++i)
    g.block(i * d, i * d, d, d).diagonal().setConstant(inverse ? 1.0 / metrics.gamma[i] : metrics.gamma[i]);
  return g;
}

}  // namespace

Mat dense_H(const MetricMatrices& metrics, int factor_rows) {
  const DenseLayout l = layout(metrics, factor_rows);
  Mat h = Mat::Zero(l.total(), l.total());
  fill_primal_diag(h, metrics, [&](std::size_t i) { return 1.0 / (metrics.alpha[i] * metrics.theta[i]); });
  h.block(l.n, l.n, l.ny, l.ny) = gamma_dense(metrics, true);
  h.block(l.n + l.ny, l.n + l.ny, l.nz, l.nz).diagonal().setConstant(1.0 / metrics.beta);
  return h;
}

Mat dense_D(const MetricMatrices& metrics, const Mat& factor) {
  const DenseLayout l = layout(metrics, static_cast<int>(factor.rows()));
  const Mat u = kron_identity(factor, metrics.multiplier_dim);
  Mat dm = Mat::Zero(l.total(), l.total());
  fill_primal_diag(dm, metrics, [&](std::size_t i) { return (2.0 - metrics.theta[i]) / metrics.alpha[i]; });
  dm.block(l.n, l.n, l.ny, l.ny) = gamma_dense(metrics, true);
  dm.block(l.n + l.ny, l.n + l.ny, l.nz, l.nz) =
      Mat::Identity(l.nz, l.nz) / metrics.beta - u * gamma_dense(metrics, false) * u.transpose();
  return dm;
}

Mat dense_Q(const MetricMatrices& metrics, const Mat& factor) {
  const DenseLayout l = layout(metrics, static_cast<int>(factor.rows()));
  const Mat u = kron_identity(factor, metrics.multiplier_dim);
  Mat q = Mat::Zero(l.total(), l.total());
  fill_primal_diag(q, metrics, [&](std::size_t i) { return 1.0 / metrics.alpha[i]; });
  q.block(l.n, l.n, l.ny, l.ny) = gamma_dense(metrics, true);
  q.block(l.n, l.n + l.ny, l.ny, l.nz) = -u.transpose();
  q.block(l.n + l.ny, l.n + l.ny, l.nz, l.nz).diagonal().setConstant(1.0 / metrics.beta);
  return q;
}

Mat dense_M(const MetricMatrices& metrics, const Mat& factor) {
  const DenseLayout l = layout(metrics, static_cast<int>(factor.rows()));
  const Mat u = kron_identity(factor, metrics.multiplier_dim);
  Mat mm = Mat::Identity(l.total(), l.total());
  fill_primal_diag(mm, metrics, [&](std::size_t i) { return metrics.theta[i]; });
  mm.block(l.n, l.n + l.ny, l.ny, l.nz) = -gamma_dense(metrics, false) * u.transpose();
  return mm;
}

MetricConstants metric_constants(const MetricMatrices& metrics, const Mat& factor) {
  const int rows = static_cast<int>(factor.rows());
  const Mat h = dense_H(metrics, rows);
  const Mat dm = dense_D(metrics, factor);
  const Mat q = dense_Q(metrics, factor);
  const Mat mm = dense_M(metrics, factor);
  auto eig = [](const Mat& a) { return Eigen::SelfAdjointEigenSolver<Mat>(a, Eigen::EigenvaluesOnly).eigenvalues(); };
  const Vec eh = eig(h);
  const Vec ed = eig(dm);
  const double qq = eig(q.transpose() * q).maxCoeff();
  const double mhm = eig(mm.transpose() * h * mm).maxCoeff();
  MetricConstants c;
  c.c1 = std::sqrt(qq / ed.minCoeff());
  c.c2 = std::sqrt(eh.maxCoeff());
  c.c3 = std::sqrt(ed.minCoeff());
  c.c4 = std::sqrt(mhm) / std::sqrt(eh.minCoeff());
  c.omega = 1.0 + c.c2 * c.c4 / c.c3;
  return c;
}

}  // namespace dpmm
