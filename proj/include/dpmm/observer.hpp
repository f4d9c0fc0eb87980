#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dpmm/engine.hpp"
#include "dpmm/metric.hpp"

namespace dpmm {

/// One trace row per round; metrics describe the state after the round.
struct TraceRow {
  int round = 0;  ///< 1-based: row k follows the k-th round
  double objective_residual = kNaN;  ///< |F(x) - F*| / |F*|, NaN without a reference
  double eq_violation = 0.0;
  double ineq_violation = 0.0;
  double consensus_error = 0.0;  ///< max_i ||y_i - mean(y)||
  double foo_residual = 0.0;
  double successive_diff_H = 0.0;  ///< ||xi^k - xi^{k+1}||_H^2
  double fejer_slack = kNaN;       ///< NaN without a reference
  double epsilon_max = 0.0;
  long inner_iterations_total = 0;  ///< summed over agents for this round
};

class IterationTrace {
 public:
  std::vector<TraceRow> rows;

  static const char* csv_header();
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
  static IterationTrace read_csv(std::istream& in);
};

/// Centralized primal-dual solution used as xi* in the descent inequality.
struct ReferencePoint {
  BlockVec x;
  Vec y;
  double f_star = kNaN;
};

/// ||H(xi^k - xi^{k+1}) + V^k|| from block formulas:
///   x-block (x^k - x_hat^k) / alpha_i + v_i, Y-block (Y^k - Y^{k+1}) / gamma_i,
///   Z-block norm^2 = Y_hat^T (L kron I) Y_hat.
double first_order_residual(const MetricMatrices& metrics, const MixingMatrix& mixing, const RoundSnapshot& snap);

/// ||xi^k - xi^{k+1}||_H^2 with the Z-block beta Y_hat^T (L kron I) Y_hat.
double successive_difference(const MetricMatrices& metrics, const MixingMatrix& mixing, const RoundSnapshot& snap);

struct InclusionResult {
  bool ok = true;
  double x_gap = 0.0;  ///< worst distance of the x-block residual to its interval
  double y_gap = 0.0;  ///< worst violation of the normal-cone conditions
  int worst_agent = -1;
  std::string worst_block;

  double gap() const { return std::max(x_gap, y_gap); }
};

/// Checks Q(xi^k - xi_hat^k) + V^k in Phi(xi_hat^k) blockwise, recomputing
/// every derivative from the problem data rather than trusting the engine:
///   (x^k - x_hat)/alpha + v - grad f(x_hat) - J_G(x_hat)^T y_hat in d(l1 + box)(x_hat),
///   (y - gamma lambda - y_hat)/gamma + G(x_hat) in N_{K°}(y_hat).
InclusionResult inclusion_check(const CoupledProblem& problem, const MetricMatrices& metrics,
                                const RoundSnapshot& snap, double tol = 1e-8);

/// Per-round invariant readings, worst case over agents.
struct InvariantReading {
  double lambda_sum = 0.0;       ///< ||sum_i lambda_i||_inf / max(1, max_i ||lambda_i||_inf)
  double polar_violation = 0.0;  ///< max(0, -min y_hat inequality entries)
  double factor_error = 0.0;     ///< ||U^T Z - Lambda||_inf
  double fejer_slack = kNaN;
  InclusionResult inclusion;
};

struct ObserverSummary {
  int rounds = 0;
  double worst_lambda_sum = 0.0;
  double worst_polar_violation = 0.0;
  double worst_factor_error = 0.0;
  double worst_inclusion_gap = 0.0;
  double min_fejer_slack = kInf;
  int fejer_violations = 0;  ///< rounds with slack below fejer_tol
  int inclusion_failures = 0;
};

struct ObserverOptions {
  double fejer_tol = 1e-8;
  double inclusion_tol = 1e-8;
  /// Keep xi^k for every round (needed for the distance-to-limit fit).
  bool record_history = false;
};

/// Simulation-only observer. Materializes U and Z, never feeds anything back.
class Observer {
 public:
  Observer(const CoupledProblem& problem, const MixingMatrix& mixing, const MetricMatrices& metrics,
           std::optional<ReferencePoint> reference = std::nullopt, ObserverOptions options = {});

  void observe(const RoundSnapshot& snap);

  const IterationTrace& trace() const { return trace_; }
  const ObserverSummary& summary() const { return summary_; }
  const std::vector<InvariantReading>& readings() const { return readings_; }
  const std::vector<XiPoint>& history() const { return history_; }
  const Mat& factor() const { return factor_; }
  const Mat& z() const { return z_; }
  /// xi* = (x*, 1 kron y*, Z*) or empty without a reference.
  const std::optional<XiPoint>& reference_xi() const { return xi_star_; }

  /// xi of the states in `after`, with the observer's Z.
  XiPoint point_of(const std::vector<AgentState>& states, const Mat& z) const;

 private:
  const CoupledProblem& problem_;
  const MixingMatrix& mixing_;
  MetricMatrices metrics_;
  ObserverOptions options_;
  std::optional<ReferencePoint> reference_;
  std::optional<XiPoint> xi_star_;
  Mat factor_;
  Mat z_;
  IterationTrace trace_;
  ObserverSummary summary_;
  std::vector<InvariantReading> readings_;
  std::vector<XiPoint> history_;
};

/// Lambda*_i = G_i(x*_i) - (1/m) sum_j G_j(x*_j): a zero of the Y-block of
/// Phi when (x*, y*) is a KKT pair.
Mat reference_lambda(const CoupledProblem& problem, const BlockVec& x_star);

/// Least-squares line through (t, values[t]).
struct LinearFit {
  double slope = kNaN;
  double intercept = kNaN;
  double r_squared = kNaN;
  int points = 0;
};
LinearFit fit_line(const std::vector<double>& t, const std::vector<double>& values);

struct RateOptions {
  int window = 100;
  int windows = 4;
  int min_rounds = 200;
};

struct RateCertificate {
  /// Max of k * r_k per tail window, oldest first.
  std::vector<double> succ_diff_window_max;
  std::vector<double> foo_sq_window_max;
  bool succ_diff_decreasing = false;
  bool foo_sq_decreasing = false;
  std::optional<LinearFit> linear_fit;  ///< of log ||xi^k - xi^inf||_H, when history is supplied
  int fit_first_round = 0;
  int fit_last_round = 0;
  std::optional<MetricConstants> constants;

  bool sublinear_ok() const { return succ_diff_decreasing && foo_sq_decreasing; }
};

/// Windowed maxima of k * successive_diff_H and k * foo_residual^2 over the
/// last `windows` windows of the trace. Throws when the trace is too short.
RateCertificate rate_analysis(const IterationTrace& trace, const RateOptions& options = {});

/// Windowed maxima of k * r_k (k 1-based) over the tail; strictly decreasing flag.
std::pair<std::vector<double>, bool> tail_window_maxima(const std::vector<double>& r, int window, int windows);

/// log ||xi^k - limit||_H for k in [first, last] fitted against k.
LinearFit distance_fit(const MetricMatrices& metrics, const std::vector<XiPoint>& history, const XiPoint& limit,
                       int first, int last);

std::string format_rate_report(const RateCertificate& cert);

}  // namespace dpmm
