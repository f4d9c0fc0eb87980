#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dpmm/experiment.hpp"
#include "dpmm/generators.hpp"
#include "dpmm/problem_io.hpp"
#include "support.hpp"

using namespace dpmm;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig quick(ExampleKind kind, int rounds) {
  ExperimentConfig c = default_config(kind);
  c.rounds = rounds;
  c.use_oracle = false;
  return c;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("family defaults") {
  const ExperimentConfig e1 = default_config(ExampleKind::example1);
  CHECK(e1.m == 20);
  CHECK(e1.n == 3);
  CHECK(e1.p == 3);
  CHECK(e1.q == 0);
  CHECK(e1.theta == "1.0");
  CHECK(e1.alpha == "10");
  CHECK(e1.gamma == "0.02");
  CHECK(e1.beta == 70.0);

  const ExperimentConfig e2 = default_config(ExampleKind::example2);
  CHECK(e2.q == 1);
  CHECK(e2.alpha == "1");
  CHECK(e2.gamma == "0.5");
  CHECK(e2.beta == 2.0);

  const ExperimentConfig st = default_config(ExampleKind::structural);
  CHECK(st.m == 10);
  CHECK(st.gamma == "0.2");
  CHECK(st.beta == 5.0);

  for (auto kind : {ExampleKind::example1, ExampleKind::example2, ExampleKind::structural}) {
    const ExperimentConfig c = default_config(kind);
    const CoupledProblem problem = build_problem(c);
    const NetworkTopology topology = build_topology(c);
    const MixingMatrix mixing = build_mixing(c, topology);
    std::vector<int> dims;
    for (const auto& a : problem.agents) dims.push_back(a.dim);
    CHECK_NOTHROW(validate_params(build_params(c, problem.agent_count()), mixing, dims, problem.cone.dim()));
  }
}

TEST_CASE("config text parsing") {
  const ExperimentConfig c = parse_config_text(
      "# comment\n"
      "example = structural\n"
      "seed = 4   # trailing comment\n"
      "gamma = 0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.1\n"
      "schedule = poly:2\n"
      "box = 2.5\n");
  CHECK(c.example == ExampleKind::structural);
  CHECK(c.seed == 4);
  CHECK(c.beta == 5.0);
  CHECK(c.schedule == "poly:2");
  CHECK(c.box == 2.5);
  const AlgorithmParams p = build_params(c, 10);
  CHECK(p.gamma[2] == doctest::Approx(0.3));
  CHECK(p.alpha.size() == 10);

  SUBCASE("example line resets earlier keys") {
    const ExperimentConfig r = parse_config_text("beta = 9\nexample = 1\n");
    CHECK(r.beta == 70.0);
    CHECK(r.q == 0);
  }
  SUBCASE("round trip through to_text") {
    const ExperimentConfig back = parse_config_text(c.to_text());
    CHECK(back.to_text() == c.to_text());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_config_text("colour = red\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("seed 4\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("rounds = many\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("example = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("schedule = poly:0.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(build_params(parse_config_text("example = structural\ngamma = 0.1, 0.2\n"), 10),
                    std::invalid_argument);
  }
}

TEST_CASE("config templates hold the family defaults") {
  for (const auto& [file, kind] : {std::pair{"example1.conf", ExampleKind::example1},
                                   std::pair{"example2.conf", ExampleKind::example2},
                                   std::pair{"structural.conf", ExampleKind::structural}}) {
    std::ifstream in(std::filesystem::path(DPMM_SOURCE_DIR) / "configs" / file);
    REQUIRE(in);
    const ExperimentConfig parsed = parse_config(in);
    ExperimentConfig family = default_config(kind);
    family.seed = parsed.seed;
    // box = 0 means the family default, which the templates spell out.
    CHECK(problem_hash(build_problem(parsed)) == problem_hash(build_problem(family)));
    family.box = parsed.box;
    CHECK(parsed.to_text() == family.to_text());
  }
}

TEST_CASE("family q is fixed") {
  ExperimentConfig c = default_config(ExampleKind::example1);
  c.q = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config(ExampleKind::example2);
  c.q = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config(ExampleKind::custom);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("example 1 construction") {
  const CoupledProblem problem = generate_example1(20, 3, 3, 7);
  CHECK(problem.cone.q == 0);
  CHECK(problem.agents[19].l1_weight == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(problem.agents[0].l1_weight == doctest::Approx(1.0 / 400.0).epsilon(1e-15));
  const BlockVec zero(20, Vec::Zero(3));
  CHECK(constraint_map(problem, zero).norm() == 0.0);
  for (const auto& a : problem.agents) {
    CHECK((a.lower.array() == -kExample1Box).all());
    CHECK((a.upper.array() == kExample1Box).all());
  }
  const CoupledProblem wide = generate_example1(20, 3, 3, 7, 5.0);
  CHECK((wide.agents[4].upper.array() == 5.0).all());
  CHECK(problem_hash(wide) != problem_hash(problem));
  CHECK_THROWS_AS(generate_example1(20, 3, 3, 7, 0.0), std::invalid_argument);
}

TEST_CASE("example 2 construction") {
  for (std::uint64_t seed : {1u, 7u, 19u}) {
    const CoupledProblem problem = generate_example2(20, 3, 3, seed);
    REQUIRE(problem.slater_witness.has_value());
    const Vec g = constraint_map(problem, *problem.slater_witness);
    CHECK(g.head(3).norm() <= 1e-10 * (1.0 + problem.agents.size()));
    CHECK(g(3) == doctest::Approx(-1.0).epsilon(1e-12));
    for (int i = 0; i < problem.agent_count(); ++i) {
      const auto& a = problem.agents[i];
      CHECK(((*problem.slater_witness)[i].array() >= a.lower.array()).all());
      CHECK(((*problem.slater_witness)[i].array() <= a.upper.array()).all());
      const auto& quad = std::get<QuadraticTerm>(a.smooth.terms().at(0));
      CHECK((quad.C - quad.C.transpose()).norm() == 0.0);
      CHECK(testsupport::jacobi_eigenvalues(quad.C).minCoeff() >= 1.0 - 1e-12);
    }
  }
}

TEST_CASE("structural construction is affine in every coupling block") {
  const CoupledProblem problem = generate_structural(10, 3, 2, 2, 3);
  for (const auto& a : problem.agents) {
    CHECK(a.smooth.kind() == "quadratic");
    CHECK(a.smooth.strong_convexity_hint() >= 1.0 - 1e-12);
    for (const auto& g : a.g) CHECK(g.is_affine());
  }
  const Vec g = constraint_map(problem, *problem.slater_witness);
  CHECK(g.tail(2).maxCoeff() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("same seed gives byte identical problems and traces") {
  ExperimentConfig c = quick(ExampleKind::example2, 60);
  c.m = 8;
  const auto dir = std::filesystem::temp_directory_path() / "dpmm_experiment_test";
  std::filesystem::remove_all(dir);
  c.out_dir = (dir / "a").string();
  run_experiment(c);
  c.out_dir = (dir / "b").string();
  run_experiment(c);
  for (const char* file : {"problem.txt", "trace.csv", "report.txt", "config.txt"}) {
    const std::string a = slurp(dir / "a" / file);
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / file));
  }
  c.seed = 2;
  c.out_dir = (dir / "c").string();
  run_experiment(c);
  CHECK(slurp(dir / "a" / "problem.txt") != slurp(dir / "c" / "problem.txt"));

  std::ifstream in(dir / "a" / "trace.csv");
  CHECK(IterationTrace::read_csv(in).rows.size() == 60);
  std::filesystem::remove_all(dir);
}

TEST_CASE("example 1 seed 7 run meets the residual tolerance") {
  ExperimentConfig c = default_config(ExampleKind::example1);
  c.seed = 7;
  const ExperimentResult r = run_experiment(c);
  const TraceRow& last = r.trace.rows.back();
  CHECK(r.run.rounds == 1000);
  CHECK(last.consensus_error < 1e-6);
  CHECK(last.eq_violation < 1e-6);
  CHECK(last.ineq_violation == 0.0);
  REQUIRE(r.final_kkt.has_value());
  CHECK(r.final_kkt->max() <= 1e-5);
  CHECK(r.summary.inclusion_failures == 0);
  CHECK(r.summary.worst_polar_violation == 0.0);
  CHECK(r.passed);
  CHECK(r.report.find("status pass") != std::string::npos);
}

TEST_CASE("structural theta 1 and 1.5 both converge along different paths") {
  ExperimentConfig c = default_config(ExampleKind::structural);
  c.rounds = 1500;
  c.seed = 2;
  const ExperimentResult one = run_experiment(c);
  c.theta = "1.5";
  const ExperimentResult late = run_experiment(c);
  for (const auto* r : {&one, &late}) {
    CHECK(r->passed);
    CHECK(r->trace.rows.back().objective_residual <= 1e-8);
  }
  CHECK(one.trace.to_csv() != late.trace.to_csv());
  CHECK(one.trace.rows[10].foo_residual != late.trace.rows[10].foo_residual);
}

TEST_CASE("stage tagged failures") {
  auto stage_of = [](const ExperimentConfig& c) {
    try {
      run_experiment(c);
    } catch (const StageError& e) {
      return e.stage;
    }
    return std::string("none");
  };
  ExperimentConfig c = quick(ExampleKind::example2, 5);
  c.m = 6;
  CHECK(stage_of(c) == "none");

  ExperimentConfig bad = c;
  bad.m = 0;
  CHECK(stage_of(bad) == "gen");
  bad = c;
  bad.graph_file = "/nonexistent/graph.txt";
  CHECK(stage_of(bad) == "graph");
  bad = c;
  bad.theta = "2";
  CHECK(stage_of(bad) == "params");
  bad = c;
  bad.gamma = "1";
  bad.beta = 100.0;
  CHECK(stage_of(bad) == "params");
  bad = c;
  bad.inner_max_iterations = 1;
  bad.schedule = "const:1e-12";
  CHECK(stage_of(bad) == "engine");

  try {
    run_experiment(bad);
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).rfind("engine: ", 0) == 0);
  }
}

}  // TEST_SUITE
