// Command-line front end: gen, oracle, run, check-params, rates, invariants.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "dpmm/experiment.hpp"
#include "dpmm/problem_io.hpp"

namespace {

using namespace dpmm;

// Options shared by every subcommand that builds an experiment. Only flags the
// user actually passed override the config file and the family defaults.
struct CommonOptions {
  std::string config_file;
  std::string example;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "run configuration (key = value lines)");
    app->add_option("--example", example, "1, 2 or structural");
    for (const char* key : {"seed", "rounds", "tol", "schedule", "theta", "alpha", "gamma", "beta", "graph", "out",
                            "m", "n", "p", "q", "mixing", "nu", "residual_tol", "oracle_tol", "workers", "cache",
                            "problem_file", "graph_edges", "inner_floor", "box"}) {
      app->add_option_function<std::string>(
          std::string("--") + key, [this, key](const std::string& v) { values[key] = v; });
    }
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg = default_config(example.empty() ? ExampleKind::example2 : parse_example_kind(example));
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw std::invalid_argument("cannot open config " + config_file);
      cfg = parse_config(in, cfg);
    }
    for (const auto& [k, v] : values) set_config_value(cfg, k, v);
    cfg.validate();
    return cfg;
  }
};

int cmd_gen(const CommonOptions& opts) {
  const ExperimentConfig cfg = opts.build();
  const CoupledProblem problem = build_problem(cfg);
  const NetworkTopology topology = build_topology(cfg);
  if (cfg.out_dir.empty()) {
    write_problem(std::cout, problem);
    return 0;
  }
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream(std::filesystem::path(cfg.out_dir) / "problem.txt") << problem_to_string(problem);
  std::ofstream graph(std::filesystem::path(cfg.out_dir) / "graph.txt");
  write_topology(graph, topology);
  std::cout << "wrote " << cfg.out_dir << "/problem.txt and graph.txt (hash " << std::hex << problem_hash(problem)
            << std::dec << ")\n";
  return 0;
}

int cmd_oracle(const CommonOptions& opts) {
  const ExperimentConfig cfg = opts.build();
  const CoupledProblem problem = build_problem(cfg);
  OracleOptions o;
  o.tol = cfg.oracle_tol;
  const OracleSolution s =
      cfg.cache_dir.empty() ? solve_reference(problem, o) : solve_reference_cached(problem, o, cfg.cache_dir);
  std::cout << "f_star " << format_number(s.f_star) << "\nkkt " << format_number(s.kkt_residual) << " ("
            << s.report.describe() << ")\niterations " << s.iterations << "\n";
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "oracle.sol");
    write_solution(out, s, problem_hash(problem));
  }
  return 0;
}

int cmd_run(const CommonOptions& opts) {
  const ExperimentResult r = run_experiment(opts.build());
  std::cout << r.report;
  return r.passed ? 0 : 1;
}

int cmd_check_params(const CommonOptions& opts) {
  const ExperimentConfig cfg = opts.build();
  const CoupledProblem problem = build_problem(cfg);
  const NetworkTopology topology = build_topology(cfg);
  const MixingMatrix mixing = build_mixing(cfg, topology);
  std::vector<int> dims;
  for (const auto& a : problem.agents) dims.push_back(a.dim);
  const ParamCheck check = check_params(build_params(cfg, problem.agent_count()), mixing, dims, problem.cone.dim());
  std::cout << check.describe() << "\n";
  return check.ok() ? 0 : 1;
}

int cmd_rates(const CommonOptions& opts, const std::string& trace_file, int window, int windows, int fit_first,
              int fit_last) {
  RateOptions ro;
  ro.window = window;
  ro.windows = windows;
  ro.min_rounds = std::min(ro.min_rounds, window * windows);
  if (!trace_file.empty()) {
    std::ifstream in(trace_file);
    if (!in) throw std::invalid_argument("cannot open trace " + trace_file);
    const RateCertificate cert = rate_analysis(IterationTrace::read_csv(in), ro);
    std::cout << format_rate_report(cert);
    return cert.sublinear_ok() ? 0 : 1;
  }
  // Run the configured experiment for 10x the fit window and fit against its final iterate.
  ExperimentConfig cfg = opts.build();
  const CoupledProblem problem = build_problem(cfg);
  const NetworkTopology topology = build_topology(cfg);
  const MixingMatrix mixing = build_mixing(cfg, topology);
  EngineOptions eo;
  eo.max_rounds = std::max(cfg.rounds, 10 * fit_last);
  eo.workers = cfg.workers;
  eo.inner.residual_floor = cfg.inner_floor;
  DpmmEngine engine(problem, topology, mixing, build_params(cfg, problem.agent_count()), eo);
  ObserverOptions oo;
  oo.record_history = true;
  Observer observer(problem, mixing, engine.metrics(), std::nullopt, oo);
  engine.run([&](const RoundSnapshot& s) { observer.observe(s); });
  // Windows over the configured horizon; the extra rounds only pin down the limit.
  IterationTrace horizon = observer.trace();
  horizon.rows.resize(std::min<std::size_t>(horizon.rows.size(), cfg.rounds));
  RateCertificate cert = rate_analysis(horizon, ro);
  cert.linear_fit = distance_fit(engine.metrics(), observer.history(), observer.history().back(), fit_first, fit_last);
  cert.fit_first_round = fit_first;
  cert.fit_last_round = fit_last;
  cert.constants = metric_constants(engine.metrics(), observer.factor());
  std::cout << format_rate_report(cert);
  return 0;
}

int cmd_invariants(const CommonOptions& opts) {
  const ExperimentResult r = run_experiment(opts.build());
  const ObserverSummary& s = r.summary;
  std::cout << "rounds " << s.rounds << "\n"
            << "inclusion_failures " << s.inclusion_failures << " (worst gap " << format_number(s.worst_inclusion_gap)
            << ")\n"
            << "lambda_sum " << format_number(s.worst_lambda_sum) << "\n"
            << "polar_violation " << format_number(s.worst_polar_violation) << "\n"
            << "factor_error " << format_number(s.worst_factor_error) << "\n";
  if (r.oracle)
    std::cout << "fejer_violations " << s.fejer_violations << " (min slack " << format_number(s.min_fejer_slack)
              << ")\n";
  const bool ok = s.inclusion_failures == 0 && s.worst_lambda_sum <= 1e-10 && s.worst_polar_violation == 0.0 &&
                  s.worst_factor_error <= 1e-8 && s.fejer_violations == 0;
  std::cout << "status " << (ok ? "pass" : "fail") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized proximal method of multipliers laboratory"};
  app.require_subcommand(1);

  CommonOptions gen_opts, oracle_opts, run_opts, check_opts, rates_opts, inv_opts;
  gen_opts.attach(app.add_subcommand("gen", "write a generated problem and graph"));
  oracle_opts.attach(app.add_subcommand("oracle", "solve the centralized problem to high accuracy"));
  run_opts.attach(app.add_subcommand("run", "run the decentralized method and write the trace"));
  check_opts.attach(app.add_subcommand("check-params", "validate algorithm parameters against the mixing matrix"));
  auto* rates = app.add_subcommand("rates", "empirical rate report from a trace or a fresh run");
  rates_opts.attach(rates);
  std::string trace_file;
  int window = 100, windows = 4, fit_first = 100, fit_last = 500;
  rates->add_option("--trace", trace_file, "trace CSV to analyse");
  rates->add_option("--window", window, "rounds per window");
  rates->add_option("--windows", windows, "number of tail windows");
  rates->add_option("--fit-first", fit_first, "first round of the distance fit");
  rates->add_option("--fit-last", fit_last, "last round of the distance fit");
  inv_opts.attach(app.add_subcommand("invariants", "run and report every invariant"));

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("gen")) return cmd_gen(gen_opts);
    if (app.got_subcommand("oracle")) return cmd_oracle(oracle_opts);
    if (app.got_subcommand("run")) return cmd_run(run_opts);
    if (app.got_subcommand("check-params")) return cmd_check_params(check_opts);
    if (app.got_subcommand("rates")) return cmd_rates(rates_opts, trace_file, window, windows, fit_first, fit_last);
    if (app.got_subcommand("invariants")) return cmd_invariants(inv_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
