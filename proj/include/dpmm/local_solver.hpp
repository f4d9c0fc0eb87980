#pragma once

#include <vector>

#include "dpmm/problem.hpp"

namespace dpmm {

/// One agent's prediction subproblem
///
///   min_x  s(x) + l1_weight ||x||_1 + indicator_box(x),
///   s(x) = f(x) + (||P(w + gamma G(x))||^2 - ||w||^2) / (2 gamma) + ||x - anchor||^2 / (2 alpha),
///
/// where P projects onto the polar cone and w = y - gamma * lambda.
struct SubproblemSpec {
  const LocalProblem& local;
  Vec anchor;
  Vec w;
  double gamma = 1.0;
  double alpha = 1.0;
  /// Stop once the infinity-norm residual is at or below this value.
  double target = 1e-10;
  /// 0 selects 1 / lipschitz_estimate().
  double step_size = 0.0;
  int max_iterations = 200000;
  /// Cached ||A||_2^2; negative means compute on demand.
  double affine_norm_sq = -1.0;
  /// Record phi at every inner iterate (tests only).
  bool record_history = false;

  double smooth_value(const Vec& x) const;
  Vec smooth_gradient(const Vec& x) const;
  /// s(x) + l1 term, +inf outside the box.
  double objective(const Vec& x) const;
  /// P(w + gamma G(x)), the multiplier the agent would broadcast at x.
  Vec multiplier_at(const Vec& x) const;
};

struct SubproblemResult {
  Vec x;
  /// v = grad s(x) + zeta with zeta in l1_weight d||x||_1 + N_box(x).
  Vec certificate;
  /// ||v||_inf
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_step = 0.0;
  std::vector<double> objective_history;
};

/// Davis-Yin splitting: box projection first, l1 prox second, smooth part as
/// the forward step. The returned point is always box-feasible.
SubproblemResult davis_yin_solve(const SubproblemSpec& spec, const Vec& warm_start);

/// dist_inf(0, d phi(x)) through the coordinate interval construction.
double subproblem_residual(const Vec& x, const SubproblemSpec& spec);

/// Upper bound on the Lipschitz constant of grad s over the box.
double lipschitz_estimate(const SubproblemSpec& spec);

/// ||A||_2^2 by power iteration on A^T A.
double affine_norm_sq_power(const Mat& A);

}  // namespace dpmm
