#include "dpmm/experiment.hpp"

#include <filesystem>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dpmm/generators.hpp"
#include "dpmm/problem_io.hpp"

namespace dpmm {

ExampleKind parse_example_kind(const std::string& text) {
  if (text == "1" || text == "example1") return ExampleKind::example1;
  if (text == "2" || text == "example2") return ExampleKind::example2;
  if (text == "structural") return ExampleKind::structural;
  if (text == "custom") return ExampleKind::custom;
  throw std::invalid_argument("unknown example kind '" + text + "' (expected 1, 2, structural or custom)");
}

std::string to_string(ExampleKind kind) {
  switch (kind) {
    case ExampleKind::example1: return "example1";
    case ExampleKind::example2: return "example2";
    case ExampleKind::structural: return "structural";
    case ExampleKind::custom: return "custom";
  }
  return "?";
}

ExperimentConfig default_config(ExampleKind kind) {
  ExperimentConfig c;
  c.example = kind;
  switch (kind) {
    case ExampleKind::example1:
      c.m = 20, c.n = 3, c.p = 3, c.q = 0;
      c.alpha = "10", c.gamma = "0.02", c.beta = 70.0;
      break;
    case ExampleKind::example2:
      c.m = 20, c.n = 3, c.p = 3, c.q = 1;
      c.alpha = "1", c.gamma = "0.5", c.beta = 2.0;
      break;
    case ExampleKind::structural:
      c.m = 10, c.n = 3, c.p = 2, c.q = 1;
      c.alpha = "1", c.gamma = "0.2", c.beta = 5.0;
      break;
    case ExampleKind::custom:
      break;
  }
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false");
}

std::vector<double> per_agent(const std::string& name, const std::string& text, int agents) {
  std::vector<double> values;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) values.push_back(to_double(name, trim(cell)));
  if (values.size() == 1) values.assign(agents, values[0]);
  if (static_cast<int>(values.size()) != agents)
    throw std::invalid_argument("config: '" + name + "' needs 1 or " + std::to_string(agents) + " values");
  return values;
}

}  // namespace

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "example") c.example = parse_example_kind(v);
  else if (key == "problem_file") c.problem_file = v;
  else if (key == "m") c.m = static_cast<int>(to_long(key, v));
  else if (key == "n") c.n = static_cast<int>(to_long(key, v));
  else if (key == "p") c.p = static_cast<int>(to_long(key, v));
  else if (key == "q") c.q = static_cast<int>(to_long(key, v));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_long(key, v));
  else if (key == "box") c.box = to_double(key, v);
  else if (key == "graph") c.graph_file = v == "random" ? std::string{} : v;
  else if (key == "graph_edges") c.graph_edges = static_cast<int>(to_long(key, v));
  else if (key == "graph_seed") c.graph_seed = static_cast<std::uint64_t>(to_long(key, v));
  else if (key == "mixing") c.mixing = v;
  else if (key == "nu") c.nu = to_double(key, v);
  else if (key == "theta") c.theta = v;
  else if (key == "alpha") c.alpha = v;
  else if (key == "gamma") c.gamma = v;
  else if (key == "beta") c.beta = to_double(key, v);
  else if (key == "schedule") c.schedule = v;
  else if (key == "rounds") c.rounds = static_cast<int>(to_long(key, v));
  else if (key == "residual_tol") c.residual_tol = to_double(key, v);
  else if (key == "tol") c.tol = to_double(key, v);
  else if (key == "oracle_tol") c.oracle_tol = to_double(key, v);
  else if (key == "use_oracle") c.use_oracle = to_bool(key, v);
  else if (key == "inner_max_iterations") c.inner_max_iterations = static_cast<int>(to_long(key, v));
  else if (key == "inner_step") c.inner_step = to_double(key, v);
  else if (key == "inner_floor") c.inner_floor = to_double(key, v);
  else if (key == "workers") c.workers = static_cast<int>(to_long(key, v));
  else if (key == "out") c.out_dir = v;
  else if (key == "cache") c.cache_dir = v;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    // A family switch brings that family's defaults with it.
    if (key == "example") base = default_config(parse_example_kind(value));
    set_config_value(base, key, value);
  }
  base.validate();
  return base;
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  return parse_config(in, std::move(base));
}

void ExperimentConfig::validate() const {
  if (example == ExampleKind::custom && problem_file.empty())
    throw std::invalid_argument("config: custom example needs problem_file");
  if (example != ExampleKind::custom && (m < 1 || n < 1 || p < 0))
    throw std::invalid_argument("config: need m >= 1, n >= 1, p >= 0");
  if (example == ExampleKind::example1 && q != 0) throw std::invalid_argument("config: example1 has q = 0");
  if (example == ExampleKind::example2 && q != 1) throw std::invalid_argument("config: example2 has q = 1");
  if (mixing != "scaled" && mixing != "laplacian")
    throw std::invalid_argument("config: mixing must be 'scaled' or 'laplacian'");
  if (rounds < 1) throw std::invalid_argument("config: rounds must be positive");
  if (!(box >= 0.0) || !std::isfinite(box)) throw std::invalid_argument("config: box must be >= 0 and finite");
  EpsilonSchedule::parse(schedule);
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream s;
  s << "example = " << to_string(example) << "\n";
  if (!problem_file.empty()) s << "problem_file = " << problem_file << "\n";
  s << "m = " << m << "\nn = " << n << "\np = " << p << "\nq = " << q << "\nseed = " << seed << "\n";
  if (box > 0.0) s << "box = " << format_number(box) << "\n";
  s << "graph = " << (graph_file.empty() ? "random" : graph_file) << "\ngraph_edges = " << graph_edges
    << "\ngraph_seed = " << graph_seed << "\n";
  s << "mixing = " << mixing << "\nnu = " << format_number(nu) << "\n";
  s << "theta = " << theta << "\nalpha = " << alpha << "\ngamma = " << gamma << "\nbeta = " << format_number(beta)
    << "\n";
  s << "schedule = " << schedule << "\nrounds = " << rounds << "\nresidual_tol = " << format_number(residual_tol)
    << "\ntol = " << format_number(tol) << "\noracle_tol = " << format_number(oracle_tol)
    << "\nuse_oracle = " << (use_oracle ? "true" : "false") << "\n";
  s << "inner_max_iterations = " << inner_max_iterations << "\ninner_step = " << format_number(inner_step)
    << "\ninner_floor = " << format_number(inner_floor) << "\nworkers = " << workers << "\n";
  return s.str();
}

CoupledProblem build_problem(const ExperimentConfig& c) {
  switch (c.example) {
    case ExampleKind::example1: return generate_example1(c.m, c.n, c.p, c.seed, c.box > 0.0 ? c.box : kExample1Box);
    case ExampleKind::example2: return generate_example2(c.m, c.n, c.p, c.seed, c.box > 0.0 ? c.box : kGeneratorBox);
    case ExampleKind::structural:
      return generate_structural(c.m, c.n, c.p, c.q, c.seed, c.box > 0.0 ? c.box : kGeneratorBox);
    case ExampleKind::custom: {
      std::ifstream in(c.problem_file);
      if (!in) throw std::invalid_argument("cannot open problem file " + c.problem_file);
      return read_problem(in);
    }
  }
  throw std::logic_error("unreachable");
}

NetworkTopology build_topology(const ExperimentConfig& c) {
  if (!c.graph_file.empty()) {
    std::ifstream in(c.graph_file);
    if (!in) throw std::invalid_argument("cannot open graph file " + c.graph_file);
    return read_topology(in);
  }
  int m = c.m;
  if (c.example == ExampleKind::custom) m = build_problem(c).agent_count();
  const int edges = c.graph_edges > 0 ? c.graph_edges : std::max(m - 1, std::min(m, m * (m - 1) / 2));
  return random_connected_topology(m, edges, c.graph_seed ? c.graph_seed : c.seed);
}

MixingMatrix build_mixing(const ExperimentConfig& c, const NetworkTopology& topology) {
  if (c.mixing == "laplacian") return build_laplacian(topology);
  return build_scaled_mixing(topology, build_metropolis_weights(topology), c.nu);
}

AlgorithmParams build_params(const ExperimentConfig& c, int agents) {
  AlgorithmParams p;
  p.theta = per_agent("theta", c.theta, agents);
  p.alpha = per_agent("alpha", c.alpha, agents);
  p.gamma = per_agent("gamma", c.gamma, agents);
  p.beta = c.beta;
  p.schedule = EpsilonSchedule::parse(c.schedule);
  return p;
}

StageError::StageError(std::string stage_, const std::string& message)
    : std::runtime_error(stage_ + ": " + message), stage(std::move(stage_)) {}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };

  ExperimentResult result;
  result.problem = stage("gen", [&] {
    cfg.validate();
    return build_problem(cfg);
  });
  const CoupledProblem& problem = result.problem;
  const NetworkTopology topology = stage("graph", [&] { return build_topology(cfg); });
  const MixingMatrix mixing = stage("graph", [&] { return build_mixing(cfg, topology); });
  const AlgorithmParams params = stage("params", [&] { return build_params(cfg, problem.agent_count()); });

  if (cfg.use_oracle) {
    result.oracle = stage("oracle", [&] {
      OracleOptions o;
      o.tol = cfg.oracle_tol;
      return cfg.cache_dir.empty() ? solve_reference(problem, o) : solve_reference_cached(problem, o, cfg.cache_dir);
    });
  }

  EngineOptions eo;
  eo.max_rounds = cfg.rounds;
  eo.residual_tol = cfg.residual_tol;
  eo.workers = cfg.workers;
  eo.inner.max_iterations = cfg.inner_max_iterations;
  eo.inner.step_size = cfg.inner_step;
  eo.inner.residual_floor = cfg.inner_floor;

  std::optional<DpmmEngine> engine;
  stage("params", [&] {
    engine.emplace(problem, topology, mixing, params, eo);
    return 0;
  });
  std::optional<ReferencePoint> ref;
  if (result.oracle) ref = ReferencePoint{result.oracle->x_star, result.oracle->y_star, result.oracle->f_star};
  Observer observer(problem, mixing, engine->metrics(), ref);
  result.run = stage("engine", [&] { return engine->run([&](const RoundSnapshot& s) { observer.observe(s); }); });
  result.trace = observer.trace();
  result.summary = observer.summary();

  const TraceRow& last = result.trace.rows.back();
  BlockVec x;
  Vec y_mean = Vec::Zero(problem.cone.dim());
  for (const auto& s : result.run.final_states) {
    x.push_back(s.x);
    y_mean += s.y;
  }
  y_mean /= problem.agent_count();
  if (result.oracle) result.final_kkt = kkt_check(problem, x, y_mean);

  const bool invariants_ok = result.summary.inclusion_failures == 0 && result.summary.worst_lambda_sum <= 1e-10 &&
                             result.summary.worst_polar_violation == 0.0;
  const bool converged = last.consensus_error <= cfg.tol && last.eq_violation <= cfg.tol &&
                         last.ineq_violation <= cfg.tol;
  result.passed = invariants_ok && converged;

  std::ostringstream r;
  r << "example " << to_string(cfg.example) << "\n";
  r << "agents " << problem.agent_count() << "\nedges " << topology.edges().size() << "\n";
  r << "lambda_max " << format_number(mixing.exact_lambda_max) << "\n";
  r << "rounds " << result.run.rounds << "\n";
  r << "reached_residual_tol " << (result.run.reached_tolerance ? "yes" : "no") << "\n";
  r << "inner_iterations " << result.run.total_inner_iterations << "\n";
  if (result.oracle) {
    r << "oracle_f_star " << format_number(result.oracle->f_star) << "\n";
    r << "oracle_kkt " << format_number(result.oracle->kkt_residual) << "\n";
    r << "objective_residual " << format_number(last.objective_residual) << "\n";
    r << "final_kkt " << format_number(result.final_kkt->max()) << " (" << result.final_kkt->describe() << ")\n";
    r << "min_fejer_slack " << format_number(result.summary.min_fejer_slack) << "\n";
  }
  r << "eq_violation " << format_number(last.eq_violation) << "\n";
  r << "ineq_violation " << format_number(last.ineq_violation) << "\n";
  r << "consensus_error " << format_number(last.consensus_error) << "\n";
  r << "foo_residual " << format_number(last.foo_residual) << "\n";
  r << "worst_inclusion_gap " << format_number(result.summary.worst_inclusion_gap) << "\n";
  r << "worst_lambda_sum " << format_number(result.summary.worst_lambda_sum) << "\n";
  r << "worst_polar_violation " << format_number(result.summary.worst_polar_violation) << "\n";
  r << "worst_factor_error " << format_number(result.summary.worst_factor_error) << "\n";
  if (static_cast<int>(result.trace.rows.size()) >= 400) {
    const RateCertificate cert = rate_analysis(result.trace);
    r << format_rate_report(cert);
  }
  r << "status " << (result.passed ? "pass" : "fail") << "\n";
  result.report = r.str();

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    std::ofstream(dir / "problem.txt") << problem_to_string(problem);
    std::ofstream(dir / "trace.csv") << result.trace.to_csv();
    std::ofstream(dir / "report.txt") << result.report;
    std::ofstream(dir / "config.txt") << cfg.to_text();
  }
  return result;
}

}  // namespace dpmm
