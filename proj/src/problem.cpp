#include "dpmm/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "dpmm/prox.hpp"

namespace dpmm {

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void ConeSpec::validate() const {
  if (p < 0 || q < 0) throw std::invalid_argument("cone: negative block size");
  if (p + q < 1) throw std::invalid_argument("cone: p + q must be at least 1");
}

SmoothFunction::SmoothFunction(int dim) : dim_(dim) {
  if (dim < 0) throw std::invalid_argument("smooth function: negative dimension");
}

SmoothFunction::SmoothFunction(int dim, std::vector<SmoothTerm> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim < 0) throw std::invalid_argument("smooth function: negative dimension");
  Mat hessian_lower = Mat::Zero(dim, dim);  // sum of constant Hessians (quadratic terms)
  for (const auto& term : terms_) {
    std::visit(overloaded{
                   [&](const QuadraticTerm& t) {
                     if (t.C.cols() != dim || t.C.rows() != t.d.size())
                       throw std::invalid_argument("quadratic term: C/d dimensions do not match");
                     hessian_lower += t.C.transpose() * t.C;
                     gradient_bound_ = kInf;
                   },
                   [&](const LogisticTerm& t) {
                     if (t.a.size() != dim) throw std::invalid_argument("logistic term: a has wrong size");
                     lipschitz_ += 0.25 * t.a.squaredNorm();
                     gradient_bound_ += t.a.norm();
                   },
                   [&](const LinearTerm& t) {
                     if (t.c.size() != dim) throw std::invalid_argument("linear term: c has wrong size");
                     gradient_bound_ += t.c.norm();
                   },
               },
               term);
  }
  if (dim > 0 && hessian_lower.squaredNorm() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(hessian_lower, Eigen::EigenvaluesOnly);
    lipschitz_ += eig.eigenvalues().maxCoeff();
    strong_convexity_ = std::max(0.0, eig.eigenvalues().minCoeff());
  }
}

SmoothFunction SmoothFunction::quadratic(Mat C, Vec d) {
  const int n = static_cast<int>(C.cols());
  return SmoothFunction(n, {QuadraticTerm{std::move(C), std::move(d)}});
}

SmoothFunction SmoothFunction::logistic(Vec a, double offset) {
  const int n = static_cast<int>(a.size());
  return SmoothFunction(n, {LogisticTerm{std::move(a), offset}});
}

SmoothFunction SmoothFunction::linear(Vec c, double offset) {
  const int n = static_cast<int>(c.size());
  return SmoothFunction(n, {LinearTerm{std::move(c), offset}});
}

std::string SmoothFunction::kind() const {
  if (terms_.empty()) return "zero";
  if (terms_.size() > 1) return "sum";
  return std::visit(overloaded{[](const QuadraticTerm&) { return std::string("quadratic"); },
                               [](const LogisticTerm&) { return std::string("logistic"); },
                               [](const LinearTerm&) { return std::string("linear"); }},
                    terms_.front());
}

bool SmoothFunction::is_affine() const {
  for (const auto& t : terms_)
    if (!std::holds_alternative<LinearTerm>(t)) return false;
  return true;
}

double SmoothFunction::value(const Vec& x) const {
  double total = 0.0;
  for (const auto& term : terms_) {
    total += std::visit(overloaded{
                            [&](const QuadraticTerm& t) { return 0.5 * (t.C * x - t.d).squaredNorm(); },
                            [&](const LogisticTerm& t) { return softplus(t.a.dot(x)) + t.offset; },
                            [&](const LinearTerm& t) { return t.c.dot(x) + t.offset; },
                        },
                        term);
  }
  return total;
}

void SmoothFunction::add_gradient(const Vec& x, double scale, Vec& out) const {
  for (const auto& term : terms_) {
    std::visit(overloaded{
                   [&](const QuadraticTerm& t) { out.noalias() += scale * (t.C.transpose() * (t.C * x - t.d)); },
                   [&](const LogisticTerm& t) { out += (scale * sigmoid(t.a.dot(x))) * t.a; },
                   [&](const LinearTerm& t) { out += scale * t.c; },
               },
               term);
  }
}

Vec SmoothFunction::gradient(const Vec& x) const {
  Vec g = Vec::Zero(dim_);
  add_gradient(x, 1.0, g);
  return g;
}

void LocalProblem::validate() const {
  cone.validate();
  if (dim <= 0) throw std::invalid_argument("local problem: dimension must be positive");
  if (smooth.dim() != dim) throw std::invalid_argument("local problem: smooth part has wrong dimension");
  if (!(l1_weight >= 0.0)) throw std::invalid_argument("local problem: l1 weight must be nonnegative");
  if (lower.size() != dim || upper.size() != dim)
    throw std::invalid_argument("local problem: box bounds have wrong dimension");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("local problem: lower bound exceeds upper bound");
  if (A.rows() != cone.p || A.cols() != dim || b.size() != cone.p)
    throw std::invalid_argument("local problem: A must be p x n and b a p-vector");
  if (static_cast<int>(g.size()) != cone.q)
    throw std::invalid_argument("local problem: need exactly q inequality functions");
  for (const auto& gj : g)
    if (gj.dim() != dim) throw std::invalid_argument("local problem: inequality function has wrong dimension");
}

bool LocalProblem::in_box(const Vec& x, double tol) const {
  return ((x - lower).array() >= -tol).all() && ((upper - x).array() >= -tol).all();
}

double LocalProblem::objective(const Vec& x) const {
  if (!in_box(x)) return kInf;
  return smooth.value(x) + l1_weight * x.lpNorm<1>();
}

Vec LocalProblem::constraint_map(const Vec& x) const {
  Vec out(cone.dim());
  out.head(cone.p).noalias() = A * x - b;
  for (int j = 0; j < cone.q; ++j) out(cone.p + j) = g[j].value(x);
  return out;
}

Vec LocalProblem::constraint_jacobian_transpose(const Vec& x, const Vec& u) const {
  Vec out = A.transpose() * u.head(cone.p);
  for (int j = 0; j < cone.q; ++j)
    if (u(cone.p + j) != 0.0) g[j].add_gradient(x, u(cone.p + j), out);
  return out;
}

double LocalProblem::affine_norm_sq() const {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  const double s = svd.singularValues()(0);
  return s * s;
}

int CoupledProblem::total_dim() const {
  int total = 0;
  for (const auto& a : agents) total += a.dim;
  return total;
}

void CoupledProblem::validate() const {
  cone.validate();
  if (agents.empty()) throw std::invalid_argument("problem: no agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!(agents[i].cone == cone))
      throw std::invalid_argument("problem: agent " + std::to_string(i) + " has a different cone");
    try {
      agents[i].validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("agent " + std::to_string(i) + ": " + e.what());
    }
  }
  if (slater_witness && slater_witness->size() != agents.size())
    throw std::invalid_argument("problem: witness has the wrong number of blocks");
}

Vec CoupledProblem::stack(const BlockVec& blocks) const {
  if (blocks.size() != agents.size()) throw std::invalid_argument("stack: wrong number of blocks");
  Vec out(total_dim());
  int offset = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (blocks[i].size() != agents[i].dim) throw std::invalid_argument("stack: block has wrong dimension");
    out.segment(offset, agents[i].dim) = blocks[i];
    offset += agents[i].dim;
  }
  return out;
}

BlockVec CoupledProblem::split(const Vec& stacked) const {
  if (stacked.size() != total_dim()) throw std::invalid_argument("dimension mismatch: expected " +
                                                                 std::to_string(total_dim()) + " entries");
  BlockVec out;
  out.reserve(agents.size());
  int offset = 0;
  for (const auto& a : agents) {
    out.push_back(stacked.segment(offset, a.dim));
    offset += a.dim;
  }
  return out;
}

double evaluate_objective(const CoupledProblem& problem, const BlockVec& x) {
  if (x.size() != problem.agents.size()) throw std::invalid_argument("objective: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != problem.agents[i].dim) throw std::invalid_argument("objective: dimension mismatch");
    total += problem.agents[i].objective(x[i]);
  }
  return total;
}

double evaluate_objective(const CoupledProblem& problem, const Vec& x) {
  return evaluate_objective(problem, problem.split(x));
}

Vec constraint_map(const CoupledProblem& problem, const BlockVec& x) {
  if (x.size() != problem.agents.size()) throw std::invalid_argument("constraint map: dimension mismatch");
  Vec total = Vec::Zero(problem.cone.dim());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != problem.agents[i].dim) throw std::invalid_argument("constraint map: dimension mismatch");
    total += problem.agents[i].constraint_map(x[i]);
  }
  return total;
}

Vec constraint_map(const CoupledProblem& problem, const Vec& x) {
  return constraint_map(problem, problem.split(x));
}

SubgradientSelection l1_box_subgradient(const Vec& grad, const Vec& x, double l1_weight, const Vec& lower,
                                        const Vec& upper) {
  const Eigen::Index n = x.size();
  SubgradientSelection out;
  out.selection.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double lo = x(j) > 0.0 ? l1_weight : -l1_weight;
    double hi = x(j) < 0.0 ? -l1_weight : l1_weight;
    if (x(j) <= lower(j)) lo = -kInf;
    if (x(j) >= upper(j)) hi = kInf;
    const double target = -grad(j);
    const double zeta = std::min(std::max(target, lo), hi);
    out.selection(j) = zeta;
    out.distance = std::max(out.distance, std::abs(target - zeta));
  }
  return out;
}

}  // namespace dpmm
