#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dpmm/types.hpp"

namespace dpmm {

struct Edge {
  int i = 0;
  int j = 0;
};

/// Undirected simple graph on nodes 0..m-1.
class NetworkTopology {
 public:
  NetworkTopology(int node_count, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Sorted neighbor ids of node i (i itself excluded).
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }
  bool has_edge(int i, int j) const;

  /// Breadth-first reachability from node 0.
  bool is_connected() const;
  void require_connected() const;

 private:
  int node_count_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// Seeded random connected graph: a random spanning tree plus uniformly
/// chosen extra edges until `edge_count` edges exist.
NetworkTopology random_connected_topology(int node_count, int edge_count, std::uint64_t seed);

/// Text format: first token `m`, then one `i j` pair per line; `#` starts a comment.
NetworkTopology read_topology(std::istream& in);
void write_topology(std::ostream& out, const NetworkTopology& topology);

enum class WeightRule {
  /// W_ij = 1 / (max(deg i, deg j) + 1); symmetric on every graph.
  metropolis_hastings,
  /// W_ij = 1 / (deg i + 1); only symmetric on regular graphs.
  degree_plus_one,
};

/// Symmetric doubly stochastic weight matrix compatible with the graph.
Mat build_metropolis_weights(const NetworkTopology& topology,
                             WeightRule rule = WeightRule::metropolis_hastings);

enum class MixingKind { laplacian, scaled_metropolis };

struct MixingMatrix {
  MixingKind kind = MixingKind::laplacian;
  Mat entries;
  /// nu for the scaled kind, 0 for the Laplacian.
  double scaling = 0.0;
  /// A priori upper bound on lambda_max: 2 * max degree, or 2 / nu.
  double spectral_bound = 0.0;
  double exact_lambda_max = 0.0;
  /// Per node, the ids j != i with a nonzero entry allowed (graph neighbors).
  std::vector<std::vector<int>> support;

  int size() const { return static_cast<int>(entries.rows()); }
};

MixingMatrix build_laplacian(const NetworkTopology& topology);

/// L = (I - W) / nu. W must be symmetric and doubly stochastic to 1e-10 and
/// supported on the graph's edges.
MixingMatrix build_scaled_mixing(const NetworkTopology& topology, const Mat& weights, double nu);

/// Largest eigenvalue of a symmetric PSD matrix by full eigensolve.
double exact_lambda_max(const Mat& mixing);

/// Power iteration for larger graphs; returns the Rayleigh quotient estimate.
double power_iteration_lambda_max(const Mat& mixing, double rel_tol = 1e-12, int max_iterations = 100000);

/// Sorted eigenvalues of a symmetric matrix.
Vec symmetric_eigenvalues(const Mat& matrix);

/// Checks symmetry, zero row sums, sparsity, PSD and null space = span{1}.
/// Throws std::invalid_argument naming the first failed property.
void validate_mixing(const MixingMatrix& mixing);

}  // namespace dpmm
