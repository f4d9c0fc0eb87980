#pragma once

#include <cstdint>

#include "dpmm/problem.hpp"

namespace dpmm {

// Seeded instance families. All draws come from one std::mt19937_64 stream in
// a fixed order (agent by agent), so a seed fixes the instance for a given
// standard library. Boxes are symmetric and equal in every coordinate; the l1
// weight of agent i (1-based) is i / m^2.

inline constexpr double kGeneratorBox = 5.0;
inline constexpr double kExample1Box = 1.0;

/// Logistic loss log(1 + exp(a_i^T x_i)) with sum A_i x_i = 0; q = 0.
/// a_i, A_i standard normal, box [-box, box]. Witness: x = 0.
/// With box = 5 most coordinates end up at l1 kinks with margins of
/// order i / m^2 and the iterates wander between supports for ~10^4 rounds.
CoupledProblem generate_example1(int m = 20, int n = 3, int p = 3, std::uint64_t seed = 1,
                                 double box = kExample1Box);

/// 1/2 ||C_i x_i - d_i||^2 with sum A_i x_i = b and
/// sum log(1 + exp(a_i^T x_i)) <= f; q = 1.
/// C_i = R_i R_i^T / n + I with R_i, d_i, A_i, a_i standard normal, xi_i
/// uniform on the box, b = sum A_i xi_i, f = sum log(1 + exp(a_i^T xi_i)) + 1.
/// Witness: xi.
CoupledProblem generate_example2(int m = 20, int n = 3, int p = 3, std::uint64_t seed = 1,
                                 double box = kGeneratorBox);

/// Quadratic smooth part as in example 2, affine equality rows as in example
/// 2 and q affine inequality rows c_ij^T x_i + o_ij with c_ij standard normal
/// and offsets making sum_i g_ij(xi_i) = -1. Every block is affine, so the
/// instance meets the structural condition for the linear rate.
CoupledProblem generate_structural(int m = 10, int n = 3, int p = 2, int q = 1, std::uint64_t seed = 1,
                                   double box = kGeneratorBox);

}  // namespace dpmm
