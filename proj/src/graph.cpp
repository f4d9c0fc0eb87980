#include "dpmm/graph.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace dpmm {

NetworkTopology::NetworkTopology(int node_count, const std::vector<std::pair<int, int>>& edges)
    : node_count_(node_count), neighbors_(node_count > 0 ? node_count : 0) {
  if (node_count <= 0) throw std::invalid_argument("topology: node count must be positive");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count || b >= node_count)
      throw std::invalid_argument("topology: node id out of range in edge (" + std::to_string(a) +
                                  ", " + std::to_string(b) + ")");
    if (a == b) throw std::invalid_argument("topology: self-loop at node " + std::to_string(a));
    const auto key = std::minmax(a, b);
    if (!seen.insert(key).second)
      throw std::invalid_argument("topology: duplicate edge (" + std::to_string(key.first) + ", " +
                                  std::to_string(key.second) + ")");
    edges_.push_back({key.first, key.second});
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& list : neighbors_) std::sort(list.begin(), list.end());
}

bool NetworkTopology::has_edge(int i, int j) const {
  const auto& list = neighbors_[i];
  return std::binary_search(list.begin(), list.end(), j);
}

bool NetworkTopology::is_connected() const {
  std::vector<char> visited(node_count_, 0);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : neighbors_[u]) {
      if (!visited[v]) {
        visited[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == node_count_;
}

void NetworkTopology::require_connected() const {
  if (!is_connected()) throw std::invalid_argument("topology: graph is disconnected");
}

NetworkTopology random_connected_topology(int node_count, int edge_count, std::uint64_t seed) {
  if (node_count <= 0) throw std::invalid_argument("random topology: node count must be positive");
  const long max_edges = static_cast<long>(node_count) * (node_count - 1) / 2;
  if (edge_count < node_count - 1 || edge_count > max_edges)
    throw std::invalid_argument("random topology: edge count must lie in [m-1, m(m-1)/2]");

  std::mt19937_64 rng(seed);
  std::vector<int> order(node_count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::set<std::pair<int, int>> chosen;
  // Random recursive tree over a shuffled node order.
  for (int k = 1; k < node_count; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    chosen.insert(std::minmax(order[k], order[pick(rng)]));
  }
  std::uniform_int_distribution<int> node(0, node_count - 1);
  while (static_cast<int>(chosen.size()) < edge_count) {
    const int a = node(rng);
    const int b = node(rng);
    if (a != b) chosen.insert(std::minmax(a, b));
  }
  return NetworkTopology(node_count, std::vector<std::pair<int, int>>(chosen.begin(), chosen.end()));
}

NetworkTopology read_topology(std::istream& in) {
  std::vector<long> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        tokens.push_back(std::stol(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::invalid_argument("topology file: not an integer: '" + tok + "'");
      }
    }
  }
  if (tokens.empty()) throw std::invalid_argument("topology file: missing node count");
  if ((tokens.size() - 1) % 2 != 0) throw std::invalid_argument("topology file: dangling node id");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t k = 1; k < tokens.size(); k += 2)
    edges.emplace_back(static_cast<int>(tokens[k]), static_cast<int>(tokens[k + 1]));
  return NetworkTopology(static_cast<int>(tokens[0]), edges);
}

void write_topology(std::ostream& out, const NetworkTopology& topology) {
  out << topology.node_count() << '\n';
  for (const auto& e : topology.edges()) out << e.i << ' ' << e.j << '\n';
}

Mat build_metropolis_weights(const NetworkTopology& topology, WeightRule rule) {
  topology.require_connected();
  const int m = topology.node_count();
  Mat w = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j : topology.neighbors(i)) {
      const int denom = rule == WeightRule::metropolis_hastings
                            ? std::max(topology.degree(i), topology.degree(j)) + 1
                            : topology.degree(i) + 1;
      w(i, j) = 1.0 / denom;
    }
  }
  for (int i = 0; i < m; ++i) w(i, i) = 1.0 - w.row(i).sum();
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument(
        "metropolis weights: asymmetric result; the degree+1 rule needs a regular graph");
  return w;
}

namespace {

std::vector<std::vector<int>> support_of(const NetworkTopology& topology) {
  std::vector<std::vector<int>> support(topology.node_count());
  for (int i = 0; i < topology.node_count(); ++i) support[i] = topology.neighbors(i);
  return support;
}

}  // namespace

MixingMatrix build_laplacian(const NetworkTopology& topology) {
  topology.require_connected();
  const int m = topology.node_count();
  MixingMatrix out;
  out.kind = MixingKind::laplacian;
  out.entries = Mat::Zero(m, m);
  int max_degree = 0;
  for (int i = 0; i < m; ++i) {
    out.entries(i, i) = topology.degree(i);
    for (int j : topology.neighbors(i)) out.entries(i, j) = -1.0;
    max_degree = std::max(max_degree, topology.degree(i));
  }
  out.spectral_bound = 2.0 * max_degree;
  out.exact_lambda_max = exact_lambda_max(out.entries);
  out.support = support_of(topology);
  return out;
}

MixingMatrix build_scaled_mixing(const NetworkTopology& topology, const Mat& weights, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("scaled mixing: nu must be positive");
  const int m = topology.node_count();
  if (weights.rows() != m || weights.cols() != m)
    throw std::invalid_argument("scaled mixing: weight matrix size does not match the graph");
  constexpr double tol = 1e-10;
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("scaled mixing: W is not symmetric");
  if ((weights.rowwise().sum().array() - 1.0).abs().maxCoeff() > tol)
    throw std::invalid_argument("scaled mixing: W is not doubly stochastic");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j && weights(i, j) != 0.0 && !topology.has_edge(i, j))
        throw std::invalid_argument("scaled mixing: W has weight on a non-edge (" +
                                    std::to_string(i) + ", " + std::to_string(j) + ")");

  MixingMatrix out;
  out.kind = MixingKind::scaled_metropolis;
  out.entries = (Mat::Identity(m, m) - weights) / nu;
  // Row sums of (I - W) are exactly representable only up to rounding; pin the diagonal.
  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j = 0; j < m; ++j)
      if (j != i) off += out.entries(i, j);
    out.entries(i, i) = -off;
  }
  out.scaling = nu;
  out.spectral_bound = 2.0 / nu;
  out.exact_lambda_max = exact_lambda_max(out.entries);
  out.support = support_of(topology);
  return out;
}

Vec symmetric_eigenvalues(const Mat& matrix) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(matrix, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolve failed");
  return solver.eigenvalues();
}

double exact_lambda_max(const Mat& mixing) {
  if (mixing.size() == 0) return 0.0;
  return std::max(0.0, symmetric_eigenvalues(mixing).maxCoeff());
}

double power_iteration_lambda_max(const Mat& mixing, double rel_tol, int max_iterations) {
  const int n = static_cast<int>(mixing.rows());
  if (n == 0) return 0.0;
  // Deterministic start vector with components in every eigendirection.
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.37 * std::sin(1.0 + 2.3 * i);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vec w = mixing * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - estimate) <= rel_tol * std::abs(next)) return next;
    estimate = next;
  }
  return estimate;
}

void validate_mixing(const MixingMatrix& mixing) {
  const Mat& l = mixing.entries;
  const int m = static_cast<int>(l.rows());
  if (l.cols() != m || m == 0) throw std::invalid_argument("mixing: matrix must be square and nonempty");
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("mixing: matrix is not symmetric");
  if (l.rowwise().sum().cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("mixing: row sums are not zero");
  if (static_cast<int>(mixing.support.size()) == m) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j && l(i, j) != 0.0 &&
            !std::binary_search(mixing.support[i].begin(), mixing.support[i].end(), j))
          throw std::invalid_argument("mixing: nonzero entry outside the graph's edges");
  }
  const Vec eig = symmetric_eigenvalues(l);
  if (eig(0) < -1e-10 * scale) throw std::invalid_argument("mixing: matrix is not positive semidefinite");
  if (m > 1 && eig(1) <= 1e-10 * scale)
    throw std::invalid_argument("mixing: null space is larger than span{1} (graph not connected through L)");
}

}  // namespace dpmm
