#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dpmm/types.hpp"

namespace dpmm {

/// Coupling cone K = {0_p} x R^q_-; multipliers live in its polar R^p x R^q_+.
struct ConeSpec {
  int p = 0;
  int q = 0;

  int dim() const { return p + q; }
  void validate() const;
  bool operator==(const ConeSpec&) const = default;
};

/// 1/2 ||C x - d||^2
struct QuadraticTerm {
  Mat C;
  Vec d;
};

/// log(1 + exp(a^T x)) + offset
struct LogisticTerm {
  Vec a;
  double offset = 0.0;
};

/// c^T x + offset
struct LinearTerm {
  Vec c;
  double offset = 0.0;
};

using SmoothTerm = std::variant<QuadraticTerm, LogisticTerm, LinearTerm>;

/// A differentiable convex function written as a sum of tagged terms.
class SmoothFunction {
 public:
  /// The zero function on R^dim.
  explicit SmoothFunction(int dim = 0);
  SmoothFunction(int dim, std::vector<SmoothTerm> terms);

  static SmoothFunction quadratic(Mat C, Vec d);
  static SmoothFunction logistic(Vec a, double offset = 0.0);
  static SmoothFunction linear(Vec c, double offset = 0.0);

  int dim() const { return dim_; }
  const std::vector<SmoothTerm>& terms() const { return terms_; }
  /// "zero", "quadratic", "logistic", "linear" or "sum".
  std::string kind() const;
  bool is_affine() const;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// out += scale * gradient(x)
  void add_gradient(const Vec& x, double scale, Vec& out) const;

  /// Upper bound on the gradient's Lipschitz constant.
  double lipschitz_hint() const { return lipschitz_; }
  /// Lower bound on the strong convexity modulus (0 when unknown or absent).
  double strong_convexity_hint() const { return strong_convexity_; }
  /// Upper bound on ||gradient|| over all of R^n, +inf when unbounded.
  double gradient_norm_bound() const { return gradient_bound_; }

 private:
  int dim_;
  std::vector<SmoothTerm> terms_;
  double lipschitz_ = 0.0;
  double strong_convexity_ = 0.0;
  double gradient_bound_ = 0.0;
};

/// Agent i's private data: f_i = smooth + l1_weight ||x||_1 on the box
/// [lower, upper], and G_i(x) = (A x - b, g_1(x), ..., g_q(x)).
struct LocalProblem {
  int dim = 0;
  SmoothFunction smooth;
  double l1_weight = 0.0;
  Vec lower;
  Vec upper;
  Mat A;
  Vec b;
  std::vector<SmoothFunction> g;
  ConeSpec cone;

  void validate() const;
  bool in_box(const Vec& x, double tol = 1e-12) const;
  /// smooth(x) + l1_weight ||x||_1, or +inf outside the box (beyond 1e-12).
  double objective(const Vec& x) const;
  Vec constraint_map(const Vec& x) const;
  /// J_G(x)^T u.
  Vec constraint_jacobian_transpose(const Vec& x, const Vec& u) const;
  /// Spectral norm of A, squared.
  double affine_norm_sq() const;
};

struct CoupledProblem {
  ConeSpec cone;
  std::vector<LocalProblem> agents;
  /// Strictly feasible point with x_i in int(box_i), if known.
  std::optional<BlockVec> slater_witness;

  int agent_count() const { return static_cast<int>(agents.size()); }
  int total_dim() const;
  void validate() const;

  Vec stack(const BlockVec& blocks) const;
  BlockVec split(const Vec& stacked) const;
};

/// Sum over agents of smooth_i + lambda_i ||x_i||_1; +inf when a block
/// leaves its box by more than 1e-12.
double evaluate_objective(const CoupledProblem& problem, const Vec& x);
double evaluate_objective(const CoupledProblem& problem, const BlockVec& x);

/// sum_i G_i(x_i) in R^{p+q}.
Vec constraint_map(const CoupledProblem& problem, const Vec& x);
Vec constraint_map(const CoupledProblem& problem, const BlockVec& x);

/// Result of measuring -grad against the subdifferential of
/// l1_weight ||.||_1 + indicator(box) at x, one coordinate interval at a time.
struct SubgradientSelection {
  /// || -grad - P_[L,U](-grad) ||_inf
  double distance = 0.0;
  /// The chosen element zeta of [L, U]; grad + zeta is the minimal-norm
  /// element of the full subdifferential in the infinity norm.
  Vec selection;
};

/// Coordinatewise: [L_j, U_j] is {w sign x_j} for x_j != 0 and [-w, w] at 0,
/// widened to -inf at an active lower bound and +inf at an active upper bound.
SubgradientSelection l1_box_subgradient(const Vec& grad, const Vec& x, double l1_weight,
                                        const Vec& lower, const Vec& upper);

}  // namespace dpmm
