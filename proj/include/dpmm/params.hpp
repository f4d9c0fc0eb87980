#pragma once

#include <string>
#include <vector>

#include "dpmm/graph.hpp"

namespace dpmm {

/// Per-agent subproblem precision eps_i^k.
class EpsilonSchedule {
 public:
  enum class Kind {
    exact,         ///< eps = 0; the solver stops at its numerical floor
    constant,      ///< eps = scale
    geometric,     ///< eps = scale * rate^k, rate in (0, 1)
    polynomial,    ///< eps = scale / (k + 1)^rate, rate > 1
    proportional,  ///< eps = scale * rate^k * ||x^k - x^{k-1}||
  };

  EpsilonSchedule() = default;
  EpsilonSchedule(Kind kind, double scale, double rate);

  static EpsilonSchedule exact() { return {}; }
  static EpsilonSchedule constant(double eps) { return {Kind::constant, eps, 0.0}; }
  static EpsilonSchedule geometric(double rate, double scale = 1.0) { return {Kind::geometric, scale, rate}; }
  static EpsilonSchedule polynomial(double power, double scale = 1.0) { return {Kind::polynomial, scale, power}; }
  static EpsilonSchedule proportional(double rate, double scale = 1.0) {
    return {Kind::proportional, scale, rate};
  }

  /// Parses "exact", "const:<eps>", "geometric:<tau>[:<c>]", "poly:<s>[:<c>]",
  /// "prop:<rho>[:<c>]".
  static EpsilonSchedule parse(const std::string& text);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double rate() const { return rate_; }

  /// eps at round k (0-based). `previous_step` is ||x^k - x^{k-1}||, or a
  /// negative value at k = 0, where the proportional kind falls back to scale.
  double value(int k, double previous_step) const;
  /// False only for the constant kind, which breaks the convergence theory.
  bool summable() const { return kind_ != Kind::constant; }

 private:
  Kind kind_ = Kind::exact;
  double scale_ = 0.0;
  double rate_ = 0.0;
};

struct AlgorithmParams {
  std::vector<double> theta;
  std::vector<double> alpha;
  std::vector<double> gamma;
  double beta = 1.0;
  EpsilonSchedule schedule;

  static AlgorithmParams uniform(int agents, double theta, double alpha, double gamma, double beta,
                                 EpsilonSchedule schedule = {});
  int agent_count() const { return static_cast<int>(theta.size()); }
};

/// Block description of the prediction/correction metrics. With
/// Theta = diag(theta_i I), Upsilon = diag(alpha_i I), Gamma = diag(gamma_i I):
///   H = diag(Upsilon^-1 Theta^-1, Gamma^-1, I / beta)
///   D = diag((2I - Theta) Upsilon^-1, Gamma^-1, I / beta - U Gamma U^T)
///   Q = [Upsilon^-1 0 0; 0 Gamma^-1 -U^T; 0 0 I / beta]
///   M = [Theta 0 0; 0 I -Gamma U^T; 0 0 I]
/// The factor U never appears here; the observer supplies it where needed.
struct MetricMatrices {
  std::vector<double> theta;
  std::vector<double> alpha;
  std::vector<double> gamma;
  double beta = 1.0;
  std::vector<int> dims;  ///< n_i
  int multiplier_dim = 0;  ///< p + q
  double lambda_max = 0.0;  ///< of the mixing matrix
  /// Smallest eigenvalue of Gamma^-1 - beta L (positive on success).
  double schur_margin = 0.0;
  /// "exact" or "scaled-sufficient" (gamma_i beta <= nu / 2).
  std::string accepted_by;
};

struct ParamViolation {
  int agent = -1;  ///< -1 for shared parameters
  std::string message;
};

struct ParamCheck {
  std::vector<ParamViolation> violations;
  double max_gamma_beta_lambda = 0.0;
  MetricMatrices metrics;

  bool ok() const { return violations.empty(); }
  std::string describe() const;
};

/// Non-throwing check of theta_i in (0, 2), alpha_i, gamma_i, beta > 0 and
/// Gamma^-1 - beta L > 0.
ParamCheck check_params(const AlgorithmParams& params, const MixingMatrix& mixing,
                        const std::vector<int>& dims, int multiplier_dim);

/// Throws std::invalid_argument listing every violation.
MetricMatrices validate_params(const AlgorithmParams& params, const MixingMatrix& mixing,
                               const std::vector<int>& dims, int multiplier_dim);

}  // namespace dpmm
