#include "dpmm/engine.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "dpmm/prox.hpp"

namespace dpmm {

SubproblemBudgetError::SubproblemBudgetError(int agent_, int round_, double achieved, double target)
    : std::runtime_error("agent " + std::to_string(agent_) + ", round " + std::to_string(round_) +
                         ": local solver reached residual " + std::to_string(achieved) + " > target " +
                         std::to_string(target) + " within its iteration budget"),
      agent(agent_),
      round(round_),
      achieved(achieved),
      target(target) {}

int default_worker_count() {
  if (const char* env = std::getenv("DPMM_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

namespace {

// Static partition of [0, count) over `workers` threads. Every index is
// processed by exactly one thread, and index i's work depends only on its own
// data, so results do not depend on the partition.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int threads = std::min(workers, count);
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (int i = t; i < count; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void prediction_step(AgentState& state, const LocalProblem& local, const AgentParams& params, double epsilon,
                     int round, const InnerSolverOptions& inner, double affine_norm_sq) {
  const Vec w = state.y - params.gamma * state.lambda;
  const double root_n = std::sqrt(static_cast<double>(local.dim));
  SubproblemSpec spec{.local = local,
                      .anchor = state.x,
                      .w = w,
                      .gamma = params.gamma,
                      .alpha = params.alpha,
                      .target = std::max(epsilon / root_n, inner.residual_floor),
                      .step_size = inner.step_size,
                      .max_iterations = inner.max_iterations,
                      .affine_norm_sq = affine_norm_sq};
  // Warm start from the previous prediction when there is one.
  const Vec& warm = state.x_hat.size() == local.dim ? state.x_hat : state.x;
  SubproblemResult result = davis_yin_solve(spec, warm);
  state.inner_iterations = result.iterations;
  if (!result.converged) throw SubproblemBudgetError(-1, round, result.residual, spec.target);

  state.epsilon = epsilon;
  state.x_hat = std::move(result.x);
  state.certificate = std::move(result.certificate);
  state.last_v_norm = state.certificate.norm();
  state.y_hat = project_polar_cone(w + params.gamma * local.constraint_map(state.x_hat), local.cone.p,
                                   local.cone.q);
}

BlockVec communication_round(const std::vector<AgentState>& states, const MixingMatrix& mixing) {
  const int m = static_cast<int>(states.size());
  BlockVec out(m);
  for (int i = 0; i < m; ++i) {
    Vec agg = mixing.entries(i, i) * states[i].y_hat;
    for (int j : mixing.support[i]) agg += mixing.entries(i, j) * states[j].y_hat;
    out[i] = std::move(agg);
  }
  return out;
}

double mixing_quadratic(const std::vector<AgentState>& states, const MixingMatrix& mixing) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(states.size()); ++i)
    for (int j : mixing.support[i])
      if (j > i) total -= mixing.entries(i, j) * (states[i].y_hat - states[j].y_hat).squaredNorm();
  return total;
}

void correction_step(AgentState& state, const Vec& aggregate, const AgentParams& params) {
  const Vec x_next = (1.0 - params.theta) * state.x + params.theta * state.x_hat;
  state.previous_step = (x_next - state.x).norm();
  state.x = x_next;
  state.lambda += params.beta * aggregate;
  state.y = state.y_hat - (params.gamma * params.beta) * aggregate;
}

DpmmEngine::DpmmEngine(const CoupledProblem& problem, const NetworkTopology& topology, const MixingMatrix& mixing,
                       AlgorithmParams params, EngineOptions options)
    : problem_(problem), mixing_(mixing), params_(std::move(params)), options_(options) {
  problem_.validate();
  topology.require_connected();
  if (mixing_.size() != problem_.agent_count() || topology.node_count() != problem_.agent_count())
    throw std::invalid_argument("engine: graph size does not match the number of agents");
  validate_mixing(mixing_);
  std::vector<int> dims;
  for (const auto& a : problem_.agents) dims.push_back(a.dim);
  metrics_ = validate_params(params_, mixing_, dims, problem_.cone.dim());
  workers_ = options_.workers > 0 ? options_.workers : default_worker_count();

  const int m = problem_.agent_count();
  states_.resize(m);
  affine_norms_.resize(m);
  for (int i = 0; i < m; ++i) {
    const LocalProblem& a = problem_.agents[i];
    affine_norms_[i] = affine_norm_sq_power(a.A);
    AgentState& s = states_[i];
    s.x = project_box(Vec::Zero(a.dim), a.lower, a.upper);
    s.y = Vec::Zero(problem_.cone.dim());
    s.lambda = Vec::Zero(problem_.cone.dim());
  }
}

void DpmmEngine::set_initial_point(const BlockVec& x, const BlockVec& y, const BlockVec& lambda) {
  if (round_ != 0) throw std::logic_error("engine: initial point can only be set before the first round");
  const int m = problem_.agent_count();
  if (static_cast<int>(x.size()) != m || static_cast<int>(y.size()) != m)
    throw std::invalid_argument("engine: initial point needs one block per agent");
  if (!lambda.empty()) {
    if (static_cast<int>(lambda.size()) != m) throw std::invalid_argument("engine: lambda needs one block per agent");
    Vec sum = Vec::Zero(problem_.cone.dim());
    double scale = 1.0;
    for (const Vec& l : lambda) {
      if (l.size() != problem_.cone.dim()) throw std::invalid_argument("engine: lambda block has the wrong size");
      sum += l;
      scale = std::max(scale, l.cwiseAbs().maxCoeff());
    }
    // Lambda has to stay in the range of U^T, i.e. sum to zero.
    if (sum.cwiseAbs().maxCoeff() > 1e-10 * scale) throw std::invalid_argument("engine: lambda must sum to zero");
    for (int i = 0; i < m; ++i) states_[i].lambda = lambda[i];
  }
  for (int i = 0; i < m; ++i) {
    const LocalProblem& a = problem_.agents[i];
    states_[i].x = project_box(x[i], a.lower, a.upper);
    states_[i].y = project_polar_cone(y[i], problem_.cone.p, problem_.cone.q);
  }
}

AgentParams DpmmEngine::agent_params(int i) const {
  return {params_.theta[i], params_.alpha[i], params_.gamma[i], params_.beta};
}

RoundSnapshot DpmmEngine::step() {
  const int m = problem_.agent_count();
  const int k = round_;

  parallel_for(m, workers_, [&](int i) {
    AgentState& s = states_[i];
    const double eps = params_.schedule.value(k, s.previous_step);
    try {
      prediction_step(s, problem_.agents[i], agent_params(i), eps, k, options_.inner, affine_norms_[i]);
    } catch (const SubproblemBudgetError& e) {
      throw SubproblemBudgetError(i, k, e.achieved, e.target);
    }
  });

  RoundSnapshot snap;
  snap.round = k;
  snap.before = states_;
  // Barrier passed: every y_hat of round k is final.
  snap.aggregates = communication_round(states_, mixing_);

  parallel_for(m, workers_, [&](int i) { correction_step(states_[i], snap.aggregates[i], agent_params(i)); });

  double foo_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    const AgentState& b = snap.before[i];
    const AgentState& a = states_[i];
    const AgentParams p = agent_params(i);
    foo_sq += ((b.x - b.x_hat) / p.alpha + b.certificate).squaredNorm();
    foo_sq += (b.y - a.y).squaredNorm() / (p.gamma * p.gamma);
    inner_total_ += b.inner_iterations;
  }
  foo_sq += mixing_quadratic(snap.before, mixing_);
  snap.foo_residual = std::sqrt(std::max(0.0, foo_sq));

  for (int i = 0; i < m; ++i) {
    const AgentState& s = states_[i];
    const double size = std::max({s.x.cwiseAbs().maxCoeff(), s.y.cwiseAbs().maxCoeff(),
                                  s.lambda.cwiseAbs().maxCoeff()});
    if (!std::isfinite(size) || size > options_.divergence_limit)
      throw DivergenceError("engine: agent " + std::to_string(i) + " diverged at round " + std::to_string(k));
  }

  snap.after = states_;
  ++round_;
  return snap;
}

RunResult DpmmEngine::run(const std::function<void(const RoundSnapshot&)>& on_round) {
  RunResult result;
  while (round_ < options_.max_rounds) {
    RoundSnapshot snap = step();
    result.last_foo_residual = snap.foo_residual;
    if (on_round) on_round(snap);
    if (options_.residual_tol > 0.0 && snap.foo_residual <= options_.residual_tol) {
      result.reached_tolerance = true;
      break;
    }
  }
  result.final_states = states_;
  result.rounds = round_;
  result.total_inner_iterations = inner_total_;
  return result;
}

}  // namespace dpmm
