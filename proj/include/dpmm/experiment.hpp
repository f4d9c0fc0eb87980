#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "dpmm/engine.hpp"
#include "dpmm/observer.hpp"
#include "dpmm/oracle.hpp"

namespace dpmm {

enum class ExampleKind { example1, example2, structural, custom };

ExampleKind parse_example_kind(const std::string& text);
std::string to_string(ExampleKind kind);

/// Everything one run needs. Text form is `key = value` per line, `#` comments;
/// see configs/ for templates. Per-agent parameters take comma-separated lists.
/// An `example` line resets every key to that family's defaults, so it goes first.
struct ExperimentConfig {
  ExampleKind example = ExampleKind::example2;
  std::string problem_file;  ///< custom kind only
  int m = 20;
  int n = 3;
  int p = 3;
  int q = 1;  ///< forced to 0 for example1 and 1 for example2
  std::uint64_t seed = 1;
  double box = 0.0;  ///< half-width of the generated boxes; 0: family default

  std::string graph_file;  ///< empty: seeded random connected graph
  int graph_edges = 0;     ///< 0: m edges
  std::uint64_t graph_seed = 0;  ///< 0: reuse seed
  std::string mixing = "scaled";  ///< "scaled" or "laplacian"
  double nu = 2.0;

  std::string theta = "1.0";
  std::string alpha = "1.0";
  std::string gamma = "0.5";
  double beta = 1.0;
  std::string schedule = "const:1e-10";

  int rounds = 1000;
  double residual_tol = 0.0;
  double tol = 1e-6;          ///< final consensus / feasibility threshold
  double oracle_tol = 1e-10;
  bool use_oracle = true;
  int inner_max_iterations = 200000;
  double inner_step = 0.0;
  double inner_floor = 1e-13;
  int workers = 0;
  std::string out_dir;   ///< empty: nothing written
  std::string cache_dir; ///< empty: oracle not cached

  void validate() const;
  std::string to_text() const;
};

/// Repo defaults per example family (chosen by a small sweep, see README).
ExperimentConfig default_config(ExampleKind kind);

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
/// Applies one `key = value` assignment; throws std::invalid_argument on unknown keys.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

CoupledProblem build_problem(const ExperimentConfig& cfg);
NetworkTopology build_topology(const ExperimentConfig& cfg);
MixingMatrix build_mixing(const ExperimentConfig& cfg, const NetworkTopology& topology);
AlgorithmParams build_params(const ExperimentConfig& cfg, int agents);

/// Failure inside one stage; `stage` is gen, graph, params, oracle, engine or observer.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message);
  std::string stage;
};

struct ExperimentResult {
  CoupledProblem problem;
  std::optional<OracleSolution> oracle;
  RunResult run;
  IterationTrace trace;
  ObserverSummary summary;
  std::optional<KktReport> final_kkt;  ///< of (x, mean y) when an oracle ran
  bool passed = false;
  std::string report;
};

/// generate -> oracle -> engine -> observer. Writes problem.txt, trace.csv and
/// report.txt under out_dir when it is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace dpmm
