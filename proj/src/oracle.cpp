#include "dpmm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dpmm/problem_io.hpp"
#include "dpmm/prox.hpp"

namespace dpmm {

double KktReport::max() const {
  return std::max({stationarity, eq_violation, ineq_violation, dual_infeasibility, complementarity});
}

std::string KktReport::describe() const {
  std::ostringstream s;
  s << "stationarity " << format_number(stationarity) << ", eq " << format_number(eq_violation) << ", ineq "
    << format_number(ineq_violation) << ", dual " << format_number(dual_infeasibility) << ", compl "
    << format_number(complementarity);
  return s.str();
}

KktReport kkt_check(const CoupledProblem& problem, const BlockVec& x, const Vec& y) {
  const int p = problem.cone.p;
  const int q = problem.cone.q;
  if (static_cast<int>(x.size()) != problem.agent_count() || y.size() != p + q)
    throw std::invalid_argument("kkt_check: dimension mismatch");
  KktReport r;
  for (int i = 0; i < problem.agent_count(); ++i) {
    const LocalProblem& a = problem.agents[i];
    Vec grad = a.smooth.gradient(x[i]) + a.constraint_jacobian_transpose(x[i], y);
    r.stationarity = std::max(r.stationarity, l1_box_subgradient(grad, x[i], a.l1_weight, a.lower, a.upper).distance);
  }
  const Vec s = constraint_map(problem, x);
  if (p > 0) r.eq_violation = s.head(p).cwiseAbs().maxCoeff();
  if (q > 0) {
    r.ineq_violation = s.tail(q).cwiseMax(0.0).maxCoeff();
    r.dual_infeasibility = std::max(0.0, -y.tail(q).minCoeff());
    r.complementarity = (y.tail(q).array() * s.tail(q).array()).abs().maxCoeff();
  }
  return r;
}

namespace {

// Upper bound on ||J_G(x)||^2 over the boxes, or a local value when a
// gradient is unbounded.
double jacobian_norm_sq(const CoupledProblem& problem, const BlockVec& x) {
  const int p = problem.cone.p;
  const int q = problem.cone.q;
  double total = 0.0;
  if (p > 0) {
    Mat stacked(p, problem.total_dim());
    int at = 0;
    for (const auto& a : problem.agents) {
      stacked.middleCols(at, a.dim) = a.A;
      at += a.dim;
    }
    total += stacked.squaredNorm() > 0.0 ? (stacked * stacked.transpose()).eval().selfadjointView<Eigen::Lower>()
                                               .eigenvalues()
                                               .maxCoeff()
                                         : 0.0;
  }
  for (int j = 0; j < q; ++j) {
    for (int i = 0; i < problem.agent_count(); ++i) {
      const SmoothFunction& g = problem.agents[i].g[j];
      double b = g.gradient_norm_bound();
      if (!std::isfinite(b)) b = 2.0 * g.gradient(x[i]).norm() + 1.0;
      total += b * b;
    }
  }
  return total;
}

// Curvature of the smooth part of the Lagrangian in x, for a given dual bound.
double primal_lipschitz(const CoupledProblem& problem, double dual_bound) {
  double lf = 0.0;
  for (const auto& a : problem.agents) {
    double l = a.smooth.lipschitz_hint();
    for (const auto& g : a.g) l += dual_bound * g.lipschitz_hint();
    lf = std::max(lf, l);
  }
  return lf;
}

struct PdState {
  BlockVec x;
  Vec y;
};

}  // namespace

OracleSolution solve_reference(const CoupledProblem& problem, const OracleOptions& options) {
  problem.validate();
  const int m = problem.agent_count();
  const int p = problem.cone.p;
  const int q = problem.cone.q;

  PdState cur;
  cur.x.resize(m);
  for (int i = 0; i < m; ++i) {
    const LocalProblem& a = problem.agents[i];
    cur.x[i] = project_box(Vec::Zero(a.dim), a.lower, a.upper);
  }
  cur.y = Vec::Zero(p + q);

  const double k_norm = std::sqrt(std::max(jacobian_norm_sq(problem, cur.x), 1e-12));
  double omega = 1.0;  // primal weight
  long it = 0;
  int restarts = 0;

  PdState anchor = cur;  // last restart point
  double anchor_kkt = kkt_check(problem, cur.x, cur.y).max();
  PdState avg = cur;
  double avg_weight = 0.0;
  double prev_candidate_kkt = kInf;
  long since_restart = 0;

  Vec g_cur = constraint_map(problem, cur.x);
  while (true) {
    const double dual_bound = q > 0 ? 2.0 * std::max(1.0, cur.y.tail(q).maxCoeff()) : 0.0;
    const double lx = primal_lipschitz(problem, dual_bound);
    const double sigma = 0.9 * omega / k_norm;
    const double tau = 1.0 / (lx / 2.0 + omega * k_norm);

    for (int inner = 0; inner < options.check_every; ++inner, ++it, ++since_restart) {
      PdState next;
      next.x.resize(m);
      for (int i = 0; i < m; ++i) {
        const LocalProblem& a = problem.agents[i];
        Vec grad = a.smooth.gradient(cur.x[i]) + a.constraint_jacobian_transpose(cur.x[i], cur.y);
        next.x[i] = project_box(prox_l1(cur.x[i] - tau * grad, tau * a.l1_weight), a.lower, a.upper);
      }
      const Vec g_next = constraint_map(problem, next.x);
      next.y = project_polar_cone(cur.y + sigma * (2.0 * g_next - g_cur), p, q);

      const double w = avg_weight + 1.0;
      for (int i = 0; i < m; ++i) avg.x[i] += (next.x[i] - avg.x[i]) / w;
      avg.y += (next.y - avg.y) / w;
      avg_weight = w;

      cur = std::move(next);
      g_cur = g_next;
    }

    if (!cur.y.allFinite() || cur.y.cwiseAbs().maxCoeff() > options.dual_blowup)
      throw OracleError("oracle: dual iterate blew up; the problem looks infeasible");

    const double kkt_cur = kkt_check(problem, cur.x, cur.y).max();
    if (kkt_cur <= options.tol) break;
    const double kkt_avg = kkt_check(problem, avg.x, avg.y).max();
    const bool use_avg = kkt_avg < kkt_cur;
    const double candidate_kkt = use_avg ? kkt_avg : kkt_cur;
    if (use_avg && kkt_avg <= options.tol) {
      cur = avg;
      break;
    }
    if (it >= options.max_iterations) {
      std::ostringstream msg;
      const PdState& best = use_avg ? avg : cur;
      msg << "oracle: KKT residual " << format_number(candidate_kkt) << " above tolerance "
          << format_number(options.tol) << " after " << it << " iterations ("
          << kkt_check(problem, best.x, best.y).describe() << ")";
      throw OracleError(msg.str());
    }

    // Adaptive restart on sufficient or stalled decay of the KKT residual.
    const bool sufficient = candidate_kkt <= 0.2 * anchor_kkt;
    const bool stalled = candidate_kkt <= 0.8 * anchor_kkt && candidate_kkt > prev_candidate_kkt;
    const bool too_long = since_restart >= std::max<long>(1000, it / 3);
    prev_candidate_kkt = candidate_kkt;
    if (sufficient || stalled || too_long) {
      PdState restart = use_avg ? avg : cur;
      // Rebalance primal and dual step sizes from the movement since the last restart.
      double dx = 0.0;
      for (int i = 0; i < m; ++i) dx += (restart.x[i] - anchor.x[i]).squaredNorm();
      const double dy = (restart.y - anchor.y).squaredNorm();
      if (dx > 1e-20 && dy > 1e-20) omega = std::exp(0.5 * std::log(std::sqrt(dy / dx)) + 0.5 * std::log(omega));
      cur = restart;
      g_cur = constraint_map(problem, cur.x);
      anchor = cur;
      anchor_kkt = candidate_kkt;
      avg = cur;
      avg_weight = 0.0;
      prev_candidate_kkt = kInf;
      since_restart = 0;
      ++restarts;
    }
  }

  OracleSolution sol;
  sol.x_star = cur.x;
  sol.y_star = cur.y;
  sol.f_star = evaluate_objective(problem, cur.x);
  sol.report = kkt_check(problem, cur.x, cur.y);
  sol.kkt_residual = sol.report.max();
  sol.iterations = it;
  sol.restarts = restarts;
  sol.tolerance = options.tol;
  return sol;
}

void write_solution(std::ostream& out, const OracleSolution& s, std::uint64_t hash) {
  out << "dpmm-oracle 1\n";
  out << "hash " << hash << "\n";
  out << "tolerance " << format_number(s.tolerance) << "\n";
  out << "f_star " << format_number(s.f_star) << "\n";
  out << "kkt " << format_number(s.kkt_residual) << "\n";
  out << "iterations " << s.iterations << " restarts " << s.restarts << "\n";
  out << "x";
  for (const auto& b : s.x_star)
    for (int j = 0; j < b.size(); ++j) out << ' ' << format_number(b(j));
  out << "\ny";
  for (int j = 0; j < s.y_star.size(); ++j) out << ' ' << format_number(s.y_star(j));
  out << "\n";
}

std::optional<OracleSolution> read_solution(std::istream& in, const CoupledProblem& problem, std::uint64_t hash,
                                            double tol) {
  auto number = [&](std::istream& is) {
    std::string tok;
    is >> tok;
    return std::stod(tok);  // accepts inf/nan spellings produced by format_number
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "dpmm-oracle" || version != 1) return std::nullopt;
  std::uint64_t stored = 0;
  if (!(in >> word >> stored) || word != "hash" || stored != hash) return std::nullopt;
  OracleSolution s;
  if (!(in >> word) || word != "tolerance") return std::nullopt;
  s.tolerance = number(in);
  if (s.tolerance != tol) return std::nullopt;
  in >> word;
  s.f_star = number(in);
  in >> word;
  s.kkt_residual = number(in);
  in >> word >> s.iterations >> word >> s.restarts;
  in >> word;
  if (word != "x") return std::nullopt;
  s.x_star.resize(problem.agent_count());
  for (int i = 0; i < problem.agent_count(); ++i) {
    s.x_star[i].resize(problem.agents[i].dim);
    for (int j = 0; j < problem.agents[i].dim; ++j) s.x_star[i](j) = number(in);
  }
  in >> word;
  if (word != "y") return std::nullopt;
  s.y_star.resize(problem.cone.dim());
  for (int j = 0; j < problem.cone.dim(); ++j) s.y_star(j) = number(in);
  if (!in) return std::nullopt;
  s.report = kkt_check(problem, s.x_star, s.y_star);
  return s;
}

OracleSolution solve_reference_cached(const CoupledProblem& problem, const OracleOptions& options,
                                      const std::filesystem::path& cache_dir) {
  const std::uint64_t hash = problem_hash(problem);
  std::ostringstream name;
  name << std::hex << hash << "-" << format_number(options.tol) << ".sol";
  const auto path = cache_dir / name.str();
  if (std::ifstream in(path); in) {
    if (auto s = read_solution(in, problem, hash, options.tol)) return *s;
  }
  OracleSolution s = solve_reference(problem, options);
  std::filesystem::create_directories(cache_dir);
  std::ofstream out(path);
  write_solution(out, s, hash);
  return s;
}

}  // namespace dpmm
