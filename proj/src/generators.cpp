#include "dpmm/generators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dpmm {

namespace {

struct Draws {
  explicit Draws(std::uint64_t seed) : rng(seed) {}

  Vec normal(int n) {
    Vec v(n);
    for (int j = 0; j < n; ++j) v(j) = gauss(rng);
    return v;
  }
  Mat normal(int r, int c) {
    Mat a(r, c);
    // Row-major fill so the stream order matches the file layout.
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = gauss(rng);
    return a;
  }
  Vec uniform(const Vec& lo, const Vec& hi) {
    Vec v(lo.size());
    for (int j = 0; j < v.size(); ++j) v(j) = std::uniform_real_distribution<double>(lo(j), hi(j))(rng);
    return v;
  }

  std::mt19937_64 rng;
  std::normal_distribution<double> gauss{0.0, 1.0};
};

LocalProblem base_agent(int i, int m, int n, const ConeSpec& cone, double box) {
  LocalProblem a;
  a.dim = n;
  a.l1_weight = static_cast<double>(i + 1) / (static_cast<double>(m) * m);
  a.lower = Vec::Constant(n, -box);
  a.upper = Vec::Constant(n, box);
  a.cone = cone;
  return a;
}

void check_sizes(int m, int n, int p, double box) {
  if (!(box > 0.0) || !std::isfinite(box)) throw std::invalid_argument("generator: box must be positive and finite");
  if (m < 1 || n < 1 || p < 0) throw std::invalid_argument("generator: need m >= 1, n >= 1, p >= 0");
}

}  // namespace

CoupledProblem generate_example1(int m, int n, int p, std::uint64_t seed, double box) {
  check_sizes(m, n, p, box);
  if (p < 1) throw std::invalid_argument("generator: example 1 needs p >= 1");
  Draws draw(seed);
  CoupledProblem problem;
  problem.cone = {p, 0};
  for (int i = 0; i < m; ++i) {
    LocalProblem a = base_agent(i, m, n, problem.cone, box);
    a.smooth = SmoothFunction::logistic(draw.normal(n));
    a.A = draw.normal(p, n);
    a.b = Vec::Zero(p);
    problem.agents.push_back(std::move(a));
  }
  problem.slater_witness = BlockVec(m, Vec::Zero(n));
  problem.validate();
  return problem;
}

CoupledProblem generate_example2(int m, int n, int p, std::uint64_t seed, double box) {
  check_sizes(m, n, p, box);
  Draws draw(seed);
  CoupledProblem problem;
  problem.cone = {p, 1};
  BlockVec xi;
  std::vector<Vec> logistic_dirs;
  Vec b_total = Vec::Zero(p);
  double f_bound = 1.0;
  for (int i = 0; i < m; ++i) {
    LocalProblem a = base_agent(i, m, n, problem.cone, box);
    const Mat r = draw.normal(n, n);
    const Mat c = r * r.transpose() / n + Mat::Identity(n, n);
    a.smooth = SmoothFunction::quadratic(c, draw.normal(n));
    a.A = draw.normal(p, n);
    logistic_dirs.push_back(draw.normal(n));
    xi.push_back(draw.uniform(a.lower, a.upper));
    b_total += a.A * xi.back();
    f_bound += SmoothFunction::logistic(logistic_dirs.back()).value(xi.back());
    problem.agents.push_back(std::move(a));
  }
  // The coupled right-hand sides are split evenly so that sum_i b_i = b and
  // sum_i g_i = sum_i log(1 + exp(a_i^T x_i)) - f.
  for (int i = 0; i < m; ++i) {
    LocalProblem& a = problem.agents[i];
    a.b = b_total / m;
    a.g = {SmoothFunction::logistic(logistic_dirs[i], -f_bound / m)};
  }
  problem.slater_witness = xi;
  problem.validate();
  return problem;
}

CoupledProblem generate_structural(int m, int n, int p, int q, std::uint64_t seed, double box) {
  check_sizes(m, n, p, box);
  if (q < 0 || p + q < 1) throw std::invalid_argument("generator: need q >= 0 and p + q >= 1");
  Draws draw(seed);
  CoupledProblem problem;
  problem.cone = {p, q};
  BlockVec xi;
  Vec b_total = Vec::Zero(p);
  std::vector<std::vector<Vec>> dirs(m);
  Vec g_at_xi = Vec::Zero(q);
  for (int i = 0; i < m; ++i) {
    LocalProblem a = base_agent(i, m, n, problem.cone, box);
    const Mat r = draw.normal(n, n);
    const Mat c = r * r.transpose() / n + Mat::Identity(n, n);
    a.smooth = SmoothFunction::quadratic(c, draw.normal(n));
    a.A = draw.normal(p, n);
    xi.push_back(draw.uniform(a.lower, a.upper));
    b_total += a.A * xi.back();
    for (int j = 0; j < q; ++j) {
      dirs[i].push_back(draw.normal(n));
      g_at_xi(j) += dirs[i][j].dot(xi.back());
    }
    problem.agents.push_back(std::move(a));
  }
  for (int i = 0; i < m; ++i) {
    LocalProblem& a = problem.agents[i];
    a.b = b_total / m;
    for (int j = 0; j < q; ++j) a.g.push_back(SmoothFunction::linear(dirs[i][j], -(g_at_xi(j) + 1.0) / m));
  }
  problem.slater_witness = xi;
  problem.validate();
  return problem;
}

}  // namespace dpmm
