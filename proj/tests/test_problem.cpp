#include <doctest.h>

#include <random>
#include <sstream>

#include "dpmm/generators.hpp"
#include "dpmm/oracle.hpp"
#include "dpmm/problem.hpp"
#include "dpmm/problem_io.hpp"
#include "dpmm/prox.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace dpmm;
using fixtures::agent;
using testsupport::numeric_gradient;
using testsupport::random_mat;
using testsupport::random_vec;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

CoupledProblem single(LocalProblem a) {
  CoupledProblem p;
  p.cone = a.cone;
  p.agents.push_back(std::move(a));
  return p;
}

}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("cone spec") {
    CHECK_THROWS(ConeSpec{0, 0}.validate());
    CHECK_THROWS(ConeSpec{-1, 2}.validate());
    CHECK_NOTHROW(ConeSpec{1, 0}.validate());
    CHECK(ConeSpec{2, 1}.dim() == 3);
  }

  TEST_CASE("polar cone projection examples") {
    CHECK(project_polar_cone(v2(1.5, -2.0), 1, 1) == v2(1.5, 0.0));
    const Vec v = v3(-1.0, 2.0, -3.0);
    CHECK(project_polar_cone(v, 3, 0) == v);
    CHECK(project_polar_cone(v3(0, 0, 3), 1, 2) == v3(0, 0, 3));
    CHECK_THROWS(project_polar_cone(v, 1, 1));
  }

  TEST_CASE("polar cone projection is idempotent and nonexpansive") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
      const Vec a = random_vec(rng, 5, 2.0), b = random_vec(rng, 5, 2.0);
      const Vec pa = project_polar_cone(a, 2, 3), pb = project_polar_cone(b, 2, 3);
      CHECK(project_polar_cone(pa, 2, 3) == pa);
      CHECK((pa - pb).norm() <= (a - b).norm() + 1e-15);
      // Variational inequality for a closed convex cone: <a - Pa, Pa> = 0 and a - Pa in the dual side.
      CHECK(std::abs((a - pa).dot(pa)) <= 1e-14);
      CHECK((a - pa).head(2).cwiseAbs().maxCoeff() == 0.0);
      CHECK((a - pa).tail(3).maxCoeff() <= 0.0);
    }
  }

  TEST_CASE("soft-thresholding examples") {
    CHECK(prox_l1(v2(2.0, -0.5), 1.0) == v2(1.0, 0.0));
    const Vec v = v3(0.3, -7.0, 0.0);
    CHECK(prox_l1(v, 0.0) == v);
    Vec three(1);
    three << 3.0;
    CHECK(prox_l1(three, 1.0)(0) == 2.0);
    CHECK_THROWS_AS(prox_l1(v, -1.0), std::invalid_argument);
  }

  TEST_CASE("soft-thresholding satisfies the prox inequality") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t) {
      const Vec v = random_vec(rng, 4, 2.0), w = random_vec(rng, 4, 2.0);
      const double tau = std::abs(random_vec(rng, 1)(0));
      const Vec p = prox_l1(v, tau);
      const double lp = 0.5 * (p - v).squaredNorm() + tau * p.lpNorm<1>();
      const double lw = 0.5 * (w - v).squaredNorm() + tau * w.lpNorm<1>();
      CHECK(lp <= lw + 1e-14);
    }
  }

  TEST_CASE("box projection examples") {
    const Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
    CHECK(project_box(v2(0.2, -0.9), lo, hi) == v2(0.2, -0.9));
    CHECK(project_box(v2(5.0, -5.0), lo, hi) == v2(1.0, -1.0));
    CHECK(project_box(v2(5.0, -5.0), Vec::Constant(2, -kInf), Vec::Constant(2, kInf)) == v2(5.0, -5.0));
    CHECK_THROWS_AS(project_box(v2(0, 0), hi, lo), std::invalid_argument);
    CHECK_THROWS_AS(project_box(v3(0, 0, 0), lo, hi), std::invalid_argument);
  }

  TEST_CASE("box projection beats every feasible point") {
    std::mt19937_64 rng(5);
    const Vec lo = v3(-1.0, 0.0, -2.0), hi = v3(1.0, 0.5, 3.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      const Vec v = random_vec(rng, 3, 3.0);
      const Vec p = project_box(v, lo, hi);
      for (int k = 0; k < 100; ++k) {
        Vec w(3);
        for (int j = 0; j < 3; ++j) w(j) = lo(j) + u(rng) * (hi(j) - lo(j));
        CHECK((p - v).norm() <= (w - v).norm() + 1e-15);
      }
    }
  }

  TEST_CASE("smooth gradients match central differences") {
    std::mt19937_64 rng(6);
    const int n = 4;
    std::vector<SmoothFunction> fs = {
        SmoothFunction::quadratic(random_mat(rng, 3, n), random_vec(rng, 3)),
        SmoothFunction::logistic(random_vec(rng, n), 0.7),
        SmoothFunction::linear(random_vec(rng, n), -2.0),
        SmoothFunction(n, {QuadraticTerm{random_mat(rng, n, n), random_vec(rng, n)},
                           LogisticTerm{random_vec(rng, n), 0.0}}),
    };
    for (const SmoothFunction& f : fs) {
      for (int t = 0; t < 20; ++t) {
        const Vec x = random_vec(rng, n, 2.0);
        const Vec g = f.gradient(x);
        const Vec ng = numeric_gradient([&](const Vec& z) { return f.value(z); }, x);
        CHECK((g - ng).norm() <= 1e-5 * std::max(1.0, g.norm()));
        Vec acc = Vec::Ones(n);
        f.add_gradient(x, -2.0, acc);
        CHECK((acc - (Vec::Ones(n) - 2.0 * g)).norm() <= 1e-12);
      }
    }
  }

  TEST_CASE("logistic value is stable for large arguments") {
    Vec a(1);
    a << 1.0;
    const SmoothFunction f = SmoothFunction::logistic(a);
    Vec x(1);
    x << 800.0;
    CHECK(f.value(x) == doctest::Approx(800.0));
    x << -800.0;
    CHECK(f.value(x) >= 0.0);
    CHECK(f.value(x) < 1e-300);
    CHECK(std::isfinite(f.gradient(x)(0)));
  }

  TEST_CASE("smooth hints") {
    Mat c(2, 2);
    c << 2, 0, 0, 1;
    const SmoothFunction q = SmoothFunction::quadratic(c, Vec::Zero(2));
    CHECK(q.lipschitz_hint() >= 4.0 - 1e-12);
    CHECK(q.strong_convexity_hint() == doctest::Approx(1.0));
    CHECK(q.kind() == "quadratic");
    const SmoothFunction l = SmoothFunction::logistic(v2(3.0, 4.0));
    CHECK(l.lipschitz_hint() >= 25.0 / 4.0 - 1e-12);
    CHECK(l.strong_convexity_hint() == 0.0);
    CHECK(SmoothFunction::linear(v2(1, 1)).is_affine());
    CHECK_FALSE(l.is_affine());
  }

  TEST_CASE("objective examples") {
    LocalProblem a = agent(2, {1, 0});
    a.smooth = fixtures::distance_sq(Vec::Zero(2));
    CHECK(evaluate_objective(single(a), Vec(Vec::Zero(2))) == 0.0);

    LocalProblem b = agent(1, {1, 0});
    Vec three(1);
    three << 3.0;
    b.smooth = fixtures::distance_sq(three);
    b.l1_weight = 1.0;
    Vec two(1);
    two << 2.0;
    CHECK(evaluate_objective(single(b), two) == doctest::Approx(2.5));
  }

  TEST_CASE("objective outside the box and dimension errors") {
    LocalProblem a = agent(2, {1, 0}, 1.0);
    const CoupledProblem p = single(a);
    CHECK(evaluate_objective(p, v2(1.0 + 5e-13, 0.0)) == 0.0);
    CHECK(evaluate_objective(p, v2(1.0 + 1e-9, 0.0)) == kInf);
    CHECK_THROWS(evaluate_objective(p, v3(0, 0, 0)));
    CHECK_THROWS(constraint_map(p, v3(0, 0, 0)));
  }

  TEST_CASE("constraint map examples") {
    LocalProblem a = agent(1, {1, 0});
    a.A = Mat::Ones(1, 1);
    a.b = Vec::Ones(1);
    Vec three(1);
    three << 3.0;
    CHECK(constraint_map(single(a), three)(0) == 2.0);

    const CoupledProblem ex1 = generate_example1(20, 3, 3, 7);
    CHECK(constraint_map(ex1, *ex1.slater_witness).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("example 2 witness is strictly feasible") {
    for (std::uint64_t seed : {1u, 7u, 42u}) {
      const CoupledProblem ex2 = generate_example2(20, 3, 3, seed);
      const Vec g = constraint_map(ex2, *ex2.slater_witness);
      CHECK(g.head(3).cwiseAbs().maxCoeff() <= 1e-10);
      // The offsets put the inequality exactly one unit inside.
      CHECK(g(3) == doctest::Approx(-1.0).epsilon(1e-10));
      for (int i = 0; i < ex2.agent_count(); ++i) CHECK(ex2.agents[i].in_box((*ex2.slater_witness)[i]));
    }
  }

  TEST_CASE("objective at the oracle solution matches the oracle value") {
    const CoupledProblem ex1 = generate_example1(20, 3, 3, 7);
    const OracleSolution s = solve_reference(ex1, {});
    CHECK(std::abs(evaluate_objective(ex1, s.x_star) - s.f_star) <= 1e-8);
  }

  TEST_CASE("l1-box subgradient intervals") {
    const Vec lo = v3(-1.0, -1.0, -1.0), hi = v3(1.0, 1.0, 1.0);
    // Interior nonzero coordinate: interval is the point w sign(x).
    SubgradientSelection s = l1_box_subgradient(v3(-0.5, 0, 0), v3(0.3, 0, 0), 0.5, lo, hi);
    CHECK(s.distance == doctest::Approx(0.0));
    CHECK(s.selection(0) == doctest::Approx(0.5));
    // At zero any |grad| <= w is stationary.
    s = l1_box_subgradient(v3(0, 0.4, -0.4), v3(0, 0, 0), 0.5, lo, hi);
    CHECK(s.distance == 0.0);
    s = l1_box_subgradient(v3(0, 0.9, 0), v3(0, 0, 0), 0.5, lo, hi);
    CHECK(s.distance == doctest::Approx(0.4));
    // Upper bound active: a pull upwards is absorbed by the normal cone.
    s = l1_box_subgradient(v3(-10, 0, 0), v3(1, 0, 0), 0.5, lo, hi);
    CHECK(s.distance == 0.0);
    s = l1_box_subgradient(v3(10, 0, 0), v3(1, 0, 0), 0.5, lo, hi);
    CHECK(s.distance == doctest::Approx(10.5));
  }

  TEST_CASE("problem validation") {
    LocalProblem a = agent(2, {1, 1});
    CHECK_NOTHROW(a.validate());
    LocalProblem bad = a;
    bad.lower(0) = 2.0;
    bad.upper(0) = 1.0;
    CHECK_THROWS(bad.validate());
    bad = a;
    bad.g.clear();
    CHECK_THROWS(bad.validate());
    bad = a;
    bad.A = Mat::Zero(2, 2);
    CHECK_THROWS(bad.validate());
    CoupledProblem p = single(a);
    LocalProblem other = agent(2, {2, 1});
    p.agents.push_back(other);
    CHECK_THROWS(p.validate());
  }

  TEST_CASE("problem files round-trip exactly") {
    const CoupledProblem ex2 = generate_example2(5, 3, 2, 9);
    const std::string text = problem_to_string(ex2);
    const CoupledProblem back = problem_from_string(text);
    CHECK(problem_to_string(back) == text);
    CHECK(problem_hash(back) == problem_hash(ex2));
    CHECK(back.slater_witness.has_value());
    std::mt19937_64 rng(8);
    for (int t = 0; t < 5; ++t) {
      const Vec x = random_vec(rng, ex2.total_dim());
      CHECK(evaluate_objective(back, x) == evaluate_objective(ex2, x));
      CHECK(constraint_map(back, x) == constraint_map(ex2, x));
    }
  }

  TEST_CASE("problem file with infinite bounds and comments") {
    LocalProblem a = agent(2, {1, 1});
    a.smooth = SmoothFunction(2, {QuadraticTerm{Mat::Identity(2, 2), v2(1, 2)}, LinearTerm{v2(1, -1), 0.5}});
    a.l1_weight = 0.25;
    a.A << 1, 2;
    a.b << 3;
    const std::string text = "# leading comment\n" + problem_to_string(single(a));
    const CoupledProblem back = problem_from_string(text);
    CHECK(back.agents[0].lower(0) == -kInf);
    CHECK(back.agents[0].upper(1) == kInf);
    CHECK(back.agents[0].smooth.kind() == "sum");
    CHECK(problem_hash(back) == problem_hash(single(a)));
  }

  TEST_CASE("malformed problem files are rejected") {
    CHECK_THROWS(problem_from_string(""));
    CHECK_THROWS(problem_from_string("dpmm-problem 2\ncone 1 0\n"));
    CHECK_THROWS(problem_from_string("dpmm-problem 1\ncone 1 0\nagents 1\nagent 0\ndim 1\nl1 x\n"));
    const std::string ok = problem_to_string(single(agent(1, {1, 0})));
    CHECK_NOTHROW(problem_from_string(ok));
    CHECK_THROWS(problem_from_string(ok.substr(0, ok.size() / 2)));
  }

  TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
      CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(kInf) == "inf");
    CHECK(format_number(-kInf) == "-inf");
  }
}
