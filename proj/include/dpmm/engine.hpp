#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dpmm/graph.hpp"
#include "dpmm/local_solver.hpp"
#include "dpmm/params.hpp"
#include "dpmm/problem.hpp"

namespace dpmm {

/// Everything agent i owns. x, y, lambda are the current iterate; the hat
/// fields and the certificate hold the prediction of the round in progress.
struct AgentState {
  Vec x;
  Vec y;
  Vec lambda;
  Vec x_hat;
  Vec y_hat;
  Vec certificate;          ///< v_i^k
  double last_v_norm = 0.0; ///< ||v_i^k||_2
  double epsilon = 0.0;     ///< eps_i^k requested this round
  double previous_step = -1.0;  ///< ||x^k - x^{k-1}||, negative before round 1
  int inner_iterations = 0;
};

struct AgentParams {
  double theta = 1.0;
  double alpha = 1.0;
  double gamma = 1.0;
  double beta = 1.0;
};

struct InnerSolverOptions {
  int max_iterations = 200000;
  double step_size = 0.0;  ///< 0 = automatic
  /// Infinity-norm target below which double precision stops paying off.
  double residual_floor = 1e-13;
};

struct EngineOptions {
  int max_rounds = 1000;
  /// Stop once the first-order residual is at or below this value (0 disables).
  double residual_tol = 0.0;
  /// Worker threads; 0 reads DPMM_WORKERS and defaults to 1.
  int workers = 0;
  InnerSolverOptions inner;
  double divergence_limit = 1e12;
};

/// The local solver missed eps_i^k within its iteration budget.
class SubproblemBudgetError : public std::runtime_error {
 public:
  SubproblemBudgetError(int agent, int round, double achieved, double target);
  int agent;
  int round;
  double achieved;
  double target;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Round k seen from outside: `before` is xi^k together with the round's
/// predictions, `after` is xi^{k+1}.
struct RoundSnapshot {
  int round = 0;
  std::vector<AgentState> before;
  std::vector<AgentState> after;
  BlockVec aggregates;  ///< sum_j L_ij y_hat_j, per agent
  double foo_residual = 0.0;
};

struct RunResult {
  std::vector<AgentState> final_states;
  int rounds = 0;
  bool reached_tolerance = false;
  double last_foo_residual = kNaN;
  long total_inner_iterations = 0;
};

/// Agent i solves its subproblem to eps_i^k and forms y_hat_i by projection.
void prediction_step(AgentState& state, const LocalProblem& local, const AgentParams& params, double epsilon,
                     int round, const InnerSolverOptions& inner, double affine_norm_sq = -1.0);

/// aggregate_i = sum_{j in N_i + i} L_ij y_hat_j. Reads y_hat of neighbors only.
BlockVec communication_round(const std::vector<AgentState>& states, const MixingMatrix& mixing);

/// Y_hat^T (L kron I) Y_hat summed over edges as sum_{i<j} -L_ij ||y_hat_i - y_hat_j||^2.
/// Equal to sum_i <y_hat_i, aggregate_i> but free of the cancellation that
/// formula suffers once the y_hat_i agree to many digits.
double mixing_quadratic(const std::vector<AgentState>& states, const MixingMatrix& mixing);

/// x <- (1-theta) x + theta x_hat, lambda <- lambda + beta agg,
/// y <- y_hat - gamma beta agg.
void correction_step(AgentState& state, const Vec& aggregate, const AgentParams& params);

/// Synchronous multi-agent simulation of the prediction-correction method.
class DpmmEngine {
 public:
  DpmmEngine(const CoupledProblem& problem, const NetworkTopology& topology, const MixingMatrix& mixing,
             AlgorithmParams params, EngineOptions options = {});

  const std::vector<AgentState>& states() const { return states_; }
  const MetricMatrices& metrics() const { return metrics_; }
  int round() const { return round_; }
  int workers() const { return workers_; }

  /// Replace the starting point; x_i is projected onto its box, y_i onto the polar cone.
  /// A nonempty `lambda` must sum to zero over agents.
  void set_initial_point(const BlockVec& x, const BlockVec& y, const BlockVec& lambda = {});

  RoundSnapshot step();
  RunResult run(const std::function<void(const RoundSnapshot&)>& on_round = {});

 private:
  AgentParams agent_params(int i) const;

  const CoupledProblem& problem_;
  const MixingMatrix& mixing_;
  AlgorithmParams params_;
  EngineOptions options_;
  MetricMatrices metrics_;
  std::vector<double> affine_norms_;
  std::vector<AgentState> states_;
  int round_ = 0;
  int workers_ = 1;
  long inner_total_ = 0;
};

/// Worker count from DPMM_WORKERS, or 1.
int default_worker_count();

}  // namespace dpmm
