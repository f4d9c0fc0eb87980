#pragma once

// Plain-text problem format, whitespace separated, `#` to end of line is a comment.
//
//   dpmm-problem 1
//   cone <p> <q>
//   agents <m>
//   agent <i>                       (i = 0..m-1, in order)
//     dim <n>
//     l1 <weight>
//     lower <n numbers>             (inf / -inf allowed)
//     upper <n numbers>
//     A <p*n numbers, row-major>
//     b <p numbers>
//     smooth <term count> <terms>
//     ineq <term count> <terms>     (exactly q of these, in order)
//   end
//   witness <sum n_i numbers>       (optional)
//
// A term is one of
//   quadratic <r> <C: r*n numbers row-major> <d: r numbers>    1/2 ||C x - d||^2
//   logistic <a: n numbers> <offset>                           log(1 + exp(a^T x)) + offset
//   linear <c: n numbers> <offset>                             c^T x + offset
//
// Numbers are written with 17 significant digits so files round-trip exactly.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dpmm/problem.hpp"

namespace dpmm {

void write_problem(std::ostream& out, const CoupledProblem& problem);
CoupledProblem read_problem(std::istream& in);

std::string problem_to_string(const CoupledProblem& problem);
CoupledProblem problem_from_string(const std::string& text);

/// FNV-1a over the serialized problem; stable across runs and platforms.
std::uint64_t problem_hash(const CoupledProblem& problem);

/// Shortest exact decimal form used by every text writer in the project.
std::string format_number(double value);

}  // namespace dpmm
