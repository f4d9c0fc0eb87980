#include <doctest.h>

#include <sstream>

#include "dpmm/graph.hpp"
#include "support.hpp"

using namespace dpmm;
using testsupport::jacobi_eigenvalues;

namespace {

NetworkTopology path(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < m; ++i) e.emplace_back(i, i + 1);
  return NetworkTopology(m, e);
}

NetworkTopology complete(int m) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) e.emplace_back(i, j);
  return NetworkTopology(m, e);
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("topology rejects self-loops, duplicates and out-of-range nodes") {
    CHECK_THROWS_AS(NetworkTopology(3, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(NetworkTopology(3, {{0, 1}, {1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(NetworkTopology(3, {{0, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(NetworkTopology(0, {}), std::invalid_argument);
  }

  TEST_CASE("connectivity by traversal") {
    CHECK(path(4).is_connected());
    const NetworkTopology split(4, {{0, 1}, {2, 3}});
    CHECK_FALSE(split.is_connected());
    CHECK_THROWS_AS(split.require_connected(), std::invalid_argument);
    CHECK_THROWS_AS(build_laplacian(split), std::invalid_argument);
    CHECK_THROWS_AS(build_metropolis_weights(split), std::invalid_argument);
  }

  TEST_CASE("Metropolis-Hastings weights on a 2-node path") {
    const Mat w = build_metropolis_weights(path(2));
    Mat expect(2, 2);
    expect << 0.5, 0.5, 0.5, 0.5;
    CHECK((w - expect).cwiseAbs().maxCoeff() < 1e-15);
    // Both rules agree when the degrees are equal.
    CHECK((build_metropolis_weights(path(2), WeightRule::degree_plus_one) - expect).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("Metropolis-Hastings weights on a 3-node path") {
    const Mat w = build_metropolis_weights(path(3));
    CHECK(w(0, 1) == doctest::Approx(1.0 / 3));
    CHECK(w(1, 2) == doctest::Approx(1.0 / 3));
    CHECK(w(0, 0) == doctest::Approx(2.0 / 3));
    CHECK(w(1, 1) == doctest::Approx(1.0 / 3));
    CHECK(w(2, 2) == doctest::Approx(2.0 / 3));
    CHECK(w(0, 2) == 0.0);
  }

  TEST_CASE("star weights are symmetric and doubly stochastic") {
    const NetworkTopology star(4, {{0, 1}, {0, 2}, {0, 3}});
    const Mat w = build_metropolis_weights(star);
    // Independent construction: hub degree 3, leaves degree 1, so every edge weight is 1/4.
    Mat expect = Mat::Zero(4, 4);
    for (int j = 1; j < 4; ++j) expect(0, j) = expect(j, 0) = 0.25;
    expect(0, 0) = 0.25;
    for (int j = 1; j < 4; ++j) expect(j, j) = 0.75;
    CHECK((w - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((w.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("degree+1 rule only where it is symmetric") {
    const NetworkTopology star(4, {{0, 1}, {0, 2}, {0, 3}});
    CHECK_THROWS_AS(build_metropolis_weights(star, WeightRule::degree_plus_one), std::invalid_argument);
    // A cycle is regular, so the rule is symmetric there.
    const NetworkTopology cycle(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    const Mat w = build_metropolis_weights(cycle, WeightRule::degree_plus_one);
    CHECK(w(0, 1) == doctest::Approx(1.0 / 3));
  }

  TEST_CASE("Laplacian examples") {
    const MixingMatrix l2 = build_laplacian(path(2));
    Mat expect(2, 2);
    expect << 1, -1, -1, 1;
    CHECK(l2.entries == expect);
    CHECK(l2.kind == MixingKind::laplacian);
    CHECK(l2.exact_lambda_max == doctest::Approx(2.0));

    const MixingMatrix l3 = build_laplacian(path(3));
    CHECK(l3.entries.diagonal() == Vec((Vec(3) << 1, 2, 1).finished()));
    CHECK(l3.entries.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("K3 Laplacian spectrum against a Jacobi eigensolve") {
    const MixingMatrix k3 = build_laplacian(complete(3));
    const Vec ref = jacobi_eigenvalues(k3.entries);
    // Frozen: {0, 3, 3}.
    CHECK(ref(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ref(1) == doctest::Approx(3.0));
    CHECK(ref(2) == doctest::Approx(3.0));
    CHECK((symmetric_eigenvalues(k3.entries) - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(exact_lambda_max(k3.entries) == doctest::Approx(3.0).epsilon(1e-10));
  }

  TEST_CASE("exact_lambda_max examples") {
    Mat l2(2, 2);
    l2 << 1, -1, -1, 1;
    CHECK(exact_lambda_max(l2) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(exact_lambda_max(Mat::Zero(3, 3)) == 0.0);
  }

  TEST_CASE("scaled mixing of the 2-node average") {
    Mat w(2, 2);
    w << 0.5, 0.5, 0.5, 0.5;
    const MixingMatrix l = build_scaled_mixing(path(2), w, 2.0);
    Mat expect(2, 2);
    expect << 0.25, -0.25, -0.25, 0.25;
    CHECK((l.entries - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(l.exact_lambda_max == doctest::Approx(0.5));
    CHECK(l.spectral_bound == doctest::Approx(1.0));
    CHECK(l.scaling == 2.0);
  }

  TEST_CASE("scaled mixing input errors") {
    const Mat w = build_metropolis_weights(path(3));
    CHECK_THROWS_AS(build_scaled_mixing(path(3), w, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_scaled_mixing(path(3), w, -1.0), std::invalid_argument);
    Mat bad = w;
    bad(0, 0) += 1e-6;
    CHECK_THROWS_AS(build_scaled_mixing(path(3), bad, 2.0), std::invalid_argument);
    Mat off_graph = w;
    off_graph(0, 2) = off_graph(2, 0) = 0.1;
    off_graph(0, 0) -= 0.1;
    off_graph(2, 2) -= 0.1;
    CHECK_THROWS_AS(build_scaled_mixing(path(3), off_graph, 2.0), std::invalid_argument);
  }

  TEST_CASE("W = I gives a zero mixing matrix that validation rejects") {
    const MixingMatrix l = build_scaled_mixing(path(3), Mat::Identity(3, 3), 2.0);
    CHECK(l.entries.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(validate_mixing(l), std::invalid_argument);
  }

  TEST_CASE("random 20-node graph: lambda_max within the bound, power iteration agrees") {
    const NetworkTopology g = random_connected_topology(20, 20, 11);
    CHECK(g.is_connected());
    CHECK(g.edges().size() == 20);
    const MixingMatrix l = build_scaled_mixing(g, build_metropolis_weights(g), 2.0);
    CHECK(l.exact_lambda_max <= l.spectral_bound);
    CHECK(power_iteration_lambda_max(l.entries) == doctest::Approx(l.exact_lambda_max).epsilon(1e-8));
    CHECK(jacobi_eigenvalues(l.entries).maxCoeff() == doctest::Approx(l.exact_lambda_max).epsilon(1e-10));
  }

  TEST_CASE("mixing matrix properties on random graphs") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const int m = 5 + static_cast<int>(seed);
      const NetworkTopology g = random_connected_topology(m, m + 2, seed);
      for (const MixingMatrix& l : {build_laplacian(g), build_scaled_mixing(g, build_metropolis_weights(g), 2.0)}) {
        CHECK((l.entries - l.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(l.entries.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
        const Vec ev = jacobi_eigenvalues(l.entries);
        CHECK(ev(0) >= -1e-10);
        CHECK(ev(1) > 1e-10);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            if (i != j && !g.has_edge(i, j)) CHECK(l.entries(i, j) == 0.0);
        CHECK_NOTHROW(validate_mixing(l));
      }
    }
  }

  TEST_CASE("random topology is seeded") {
    const NetworkTopology a = random_connected_topology(12, 15, 5);
    const NetworkTopology b = random_connected_topology(12, 15, 5);
    std::ostringstream sa, sb;
    write_topology(sa, a);
    write_topology(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK_THROWS_AS(random_connected_topology(5, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_connected_topology(4, 7, 1), std::invalid_argument);
  }

  TEST_CASE("topology file round trip with comments") {
    std::istringstream in("# triangle plus tail\n4\n0 1\n1 2  # inline\n2 0\n2 3\n");
    const NetworkTopology g = read_topology(in);
    CHECK(g.node_count() == 4);
    CHECK(g.edges().size() == 4);
    CHECK(g.has_edge(3, 2));
    std::ostringstream out;
    write_topology(out, g);
    std::istringstream back(out.str());
    CHECK(read_topology(back).edges().size() == 4);
    std::istringstream bad("3\n0 1 2\n");
    CHECK_THROWS(read_topology(bad));
  }
}
