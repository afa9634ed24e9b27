#pragma once
// Experiment orchestration behind the CLI: JSON configs, named presets,
// deterministic parameter sweeps, and CSV-ready result assembly.  Everything
// here is plumbing around the library calls; no numerics live in this layer.
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mec/sim.hpp"
#include "mec/table.hpp"

namespace mec {

inline constexpr const char* kToolkitVersion = "1.0.0";

// A validated experiment document.  `doc` keeps the full JSON tree (runners
// pull their own fields); kind/seed/jobs/out are hoisted for convenience.
struct ExperimentConfig {
  std::string kind;  // aoi | simulate | mfe | nash | mm-mfe | sweep | validate
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;  // output CSV path; empty -> stdout
  nlohmann::json doc;

  // Fingerprint of the semantically meaningful fields: the canonical
  // (sorted-key) dump of doc minus `out`, `jobs` and `description`.
  std::uint64_t hash() const;
};

// Throws std::invalid_argument on unknown kinds / malformed fields and
// nlohmann::json exceptions on unparseable input.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

// Built-in study presets (eight) plus the "validate" suite.
std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);  // throws on unknown

// One analytic-vs-simulated checkpoint of the validation suite.  The spec
// horizon is a placeholder; runners rescale it to hit a delivery target.
struct ValidationPoint {
  std::string name;   // e.g. "equitable-1"
  std::string focal;  // device label whose age is checked
  NetworkSpec spec;
  double analytic = 0.0;
};
std::vector<ValidationPoint> validation_points();

// Horizon that makes the focal device collect ~target deliveries, scaled
// from a short pilot run.  Throws DegenerateSimulation if even the pilot
// never delivers.
double horizon_for_deliveries(const NetworkSpec& spec,
                              const std::string& focal, double target);

struct RunOutcome {
  ResultTable table;
  int exit_code = 0;    // 0 ok, 3 solver non-convergence, 4 degenerate
  std::string message;  // status line for stderr (may be empty)
  // Flat metrics for sweep assembly; empty when the kind is not sweepable.
  std::vector<std::pair<std::string, double>> summary;
};

// Dispatches on cfg.kind and runs the experiment to a ResultTable with
// metadata (toolkit version, kind, config hash, seed) already attached.
// Exceptions: std::invalid_argument for semantic config errors,
// DegenerateSimulation from the simulators, std::runtime_error for solver
// failures; the CLI maps these to exit codes 2/4/3.
RunOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace mec
