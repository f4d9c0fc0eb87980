#include "dpmm/local_solver.hpp"

#include <cmath>
#include <variant>

#include "dpmm/graph.hpp"
#include "dpmm/prox.hpp"

namespace dpmm {

Vec SubproblemSpec::multiplier_at(const Vec& x) const {
  return project_polar_cone(w + gamma * local.constraint_map(x), local.cone.p, local.cone.q);
}

double SubproblemSpec::smooth_value(const Vec& x) const {
  const Vec mult = multiplier_at(x);
  return local.smooth.value(x) + (mult.squaredNorm() - w.squaredNorm()) / (2.0 * gamma) +
         (x - anchor).squaredNorm() / (2.0 * alpha);
}

Vec SubproblemSpec::smooth_gradient(const Vec& x) const {
  Vec grad = local.constraint_jacobian_transpose(x, multiplier_at(x));
  local.smooth.add_gradient(x, 1.0, grad);
  grad += (x - anchor) / alpha;
  return grad;
}

double SubproblemSpec::objective(const Vec& x) const {
  if (!local.in_box(x)) return kInf;
  return smooth_value(x) + local.l1_weight * x.lpNorm<1>();
}

double affine_norm_sq_power(const Mat& A) {
  if (A.size() == 0) return 0.0;
  return power_iteration_lambda_max(A.transpose() * A, 1e-12, 10000);
}

namespace {

// Largest value of g over the box, +inf when unbounded.
double max_over_box(const SmoothFunction& g, const Vec& lower, const Vec& upper) {
  double total = 0.0;
  for (const auto& term : g.terms()) {
    if (const auto* l = std::get_if<LogisticTerm>(&term)) {
      double t = 0.0;
      for (Eigen::Index k = 0; k < l->a.size(); ++k) t += std::max(l->a(k) * lower(k), l->a(k) * upper(k));
      if (!std::isfinite(t)) return kInf;
      total += (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) + l->offset;
    } else if (const auto* c = std::get_if<LinearTerm>(&term)) {
      double t = c->offset;
      for (Eigen::Index k = 0; k < c->c.size(); ++k) {
        if (c->c(k) == 0.0) continue;
        t += std::max(c->c(k) * lower(k), c->c(k) * upper(k));
      }
      if (!std::isfinite(t)) return kInf;
      total += t;
    } else {
      return kInf;
    }
  }
  return total;
}

}  // namespace

double lipschitz_estimate(const SubproblemSpec& spec) {
  const LocalProblem& local = spec.local;
  const double a_sq = spec.affine_norm_sq >= 0.0 ? spec.affine_norm_sq : affine_norm_sq_power(local.A);
  double bound = local.smooth.lipschitz_hint() + spec.gamma * a_sq + 1.0 / spec.alpha;
  for (int j = 0; j < local.cone.q; ++j) {
    const SmoothFunction& g = local.g[j];
    const double grad_bound = g.gradient_norm_bound();
    bound += spec.gamma * grad_bound * grad_bound;
    if (g.lipschitz_hint() > 0.0) {
      double g_max = max_over_box(g, local.lower, local.upper);
      // Unbounded box: start from the anchor and let backtracking correct.
      if (!std::isfinite(g_max)) g_max = g.value(spec.anchor) + 1.0;
      const double mult_bound = std::max(0.0, spec.w(local.cone.p + j) + spec.gamma * g_max);
      bound += mult_bound * g.lipschitz_hint();
    }
  }
  return bound;
}

double subproblem_residual(const Vec& x, const SubproblemSpec& spec) {
  return l1_box_subgradient(spec.smooth_gradient(x), x, spec.local.l1_weight, spec.local.lower,
                            spec.local.upper)
      .distance;
}

namespace {

struct Candidate {
  Vec x;
  Vec grad;
  SubgradientSelection sel;
};

Candidate evaluate(const SubproblemSpec& spec, Vec x) {
  Candidate c{std::move(x), Vec(), {}};
  c.grad = spec.smooth_gradient(c.x);
  c.sel = l1_box_subgradient(c.grad, c.x, spec.local.l1_weight, spec.local.lower, spec.local.upper);
  return c;
}

SubproblemResult finish(const SubproblemSpec& spec, Candidate&& c, int iterations, double step) {
  SubproblemResult out;
  out.certificate = c.grad + c.sel.selection;
  out.residual = c.sel.distance;
  out.x = std::move(c.x);
  out.iterations = iterations;
  out.converged = out.residual <= spec.target;
  out.final_step = step;
  return out;
}

}  // namespace

SubproblemResult davis_yin_solve(const SubproblemSpec& spec, const Vec& warm_start) {
  const LocalProblem& local = spec.local;
  double step = spec.step_size > 0.0 ? spec.step_size : 1.0 / lipschitz_estimate(spec);
  const double weight = local.l1_weight;

  Vec z = warm_start;
  std::vector<double> history;
  Candidate best;
  best.sel.distance = kInf;

  for (int it = 0; it < spec.max_iterations; ++it) {
    Candidate xb = evaluate(spec, project_box(z, local.lower, local.upper));
    if (spec.record_history) history.push_back(spec.objective(xb.x));
    if (xb.sel.distance <= spec.target) {
      auto out = finish(spec, std::move(xb), it, step);
      out.objective_history = std::move(history);
      return out;
    }

    const Vec xa = prox_l1(2.0 * xb.x - z - step * xb.grad, step * weight);
    const Vec diff = xa - xb.x;

    // Sufficient-decrease check on the forward step; the step halves on violation.
    const double s_b = spec.smooth_value(xb.x);
    const double model = s_b + xb.grad.dot(diff) + diff.squaredNorm() / (2.0 * step);
    const bool descent_ok = spec.smooth_value(xa) <= model + 1e-12 * (1.0 + std::abs(s_b));

    // The prox output carries exact zeros; its box projection is the
    // composite prox of l1 + box, so it often certifies before x_B does.
    Candidate xp = evaluate(spec, project_box(xa, local.lower, local.upper));
    if (xp.sel.distance <= spec.target) {
      auto out = finish(spec, std::move(xp), it + 1, step);
      out.objective_history = std::move(history);
      return out;
    }
    if (xb.sel.distance < best.sel.distance) best = std::move(xb);
    if (xp.sel.distance < best.sel.distance) best = std::move(xp);

    if (!descent_ok) {
      step *= 0.5;
      continue;
    }
    z += diff;
  }
  auto out = finish(spec, std::move(best), spec.max_iterations, step);
  out.objective_history = std::move(history);
  return out;
}

}  // namespace dpmm
