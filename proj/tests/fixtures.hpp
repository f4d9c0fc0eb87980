#pragma once

// Small hand-built instances shared by several test files.

#include <utility>
#include <vector>

#include "dpmm/graph.hpp"
#include "dpmm/problem.hpp"

namespace fixtures {

using namespace dpmm;

inline LocalProblem agent(int n, const ConeSpec& cone, double box = kInf) {
  LocalProblem a;
  a.dim = n;
  a.smooth = SmoothFunction(n);
  a.lower = Vec::Constant(n, -box);
  a.upper = Vec::Constant(n, box);
  a.A = Mat::Zero(cone.p, n);
  a.b = Vec::Zero(cone.p);
  a.cone = cone;
  for (int j = 0; j < cone.q; ++j) a.g.push_back(SmoothFunction::linear(Vec::Zero(n), -1.0));
  return a;
}

/// 1/2 ||x - center||^2
inline SmoothFunction distance_sq(const Vec& center) {
  return SmoothFunction::quadratic(Mat::Identity(center.size(), center.size()), center);
}

inline NetworkTopology path_graph(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < m; ++i) e.emplace_back(i, i + 1);
  return NetworkTopology(m, e);
}

inline NetworkTopology cycle_graph(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < m; ++i) e.emplace_back(i, (i + 1) % m);
  return NetworkTopology(m, e);
}

inline MixingMatrix scaled_mixing(const NetworkTopology& g, double nu = 2.0) {
  return build_scaled_mixing(g, build_metropolis_weights(g), nu);
}

}  // namespace fixtures
