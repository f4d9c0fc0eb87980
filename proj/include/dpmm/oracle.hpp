#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "dpmm/problem.hpp"

namespace dpmm {

/// KKT residuals of a centralized pair (x, y) with y in R^{p+q}.
struct KktReport {
  double stationarity = 0.0;       ///< max_i dist_inf(0, d_x l_i(x_i, y))
  double eq_violation = 0.0;       ///< ||sum (A_i x_i - b_i)||_inf
  double ineq_violation = 0.0;     ///< ||max(sum g_i(x_i), 0)||_inf
  double dual_infeasibility = 0.0; ///< max(-min(y_ineq), 0)
  double complementarity = 0.0;    ///< max_j |y_j * (sum g_i)_j|

  double max() const;
  bool ok(double tol) const { return max() <= tol; }
  std::string describe() const;
};

KktReport kkt_check(const CoupledProblem& problem, const BlockVec& x, const Vec& y);

struct OracleOptions {
  double tol = 1e-10;
  long max_iterations = 20'000'000;
  int check_every = 64;
  /// |y| beyond this is taken as a sign of infeasibility.
  double dual_blowup = 1e10;
};

struct OracleSolution {
  BlockVec x_star;
  Vec y_star;
  double f_star = kNaN;
  double kkt_residual = kNaN;
  KktReport report;
  long iterations = 0;
  int restarts = 0;
  double tolerance = 0.0;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Restarted primal-dual hybrid gradient on the centralized Lagrangian
///   sum_i [smooth_i(x_i) + l1_i ||x_i||_1 + box_i(x_i)] + <y, sum_i G_i(x_i)> - K°(y).
/// Runs until the KKT residual is at most options.tol.
OracleSolution solve_reference(const CoupledProblem& problem, const OracleOptions& options = {});

/// Text form: header, hash, tolerance, scalars, then x and y.
void write_solution(std::ostream& out, const OracleSolution& solution, std::uint64_t problem_hash);
/// Empty when the stored hash or tolerance does not match.
std::optional<OracleSolution> read_solution(std::istream& in, const CoupledProblem& problem,
                                            std::uint64_t problem_hash, double tol);

/// Looks up `<cache_dir>/<hash>-<tol>.sol` and solves on a miss.
OracleSolution solve_reference_cached(const CoupledProblem& problem, const OracleOptions& options,
                                      const std::filesystem::path& cache_dir);

}  // namespace dpmm
