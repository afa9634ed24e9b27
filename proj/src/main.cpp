#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mec/experiments.hpp"

// Thin shell around run_experiment(): resolve the config (file or preset),
// apply command-line overrides, run, write the CSV.  Exit codes: 0 success,
// 2 invalid config, 3 solver non-convergence / failure, 4 degenerate
// simulation.

namespace {

struct Cli {
  std::string config;
  std::string out;
  std::string preset;
  std::uint64_t seed = 0;
  int jobs = 1;
};

int run(const std::string& kind, const Cli& cli, const CLI::App& sub) {
  nlohmann::json doc;
  if (!cli.preset.empty() && !cli.config.empty()) {
    std::cerr << "error: give either --config or --preset, not both\n";
    return 2;
  }
  if (!cli.preset.empty()) {
    doc = mec::preset_config(cli.preset);
  } else if (!cli.config.empty()) {
    std::ifstream is(cli.config);
    if (!is) {
      std::cerr << "error: cannot open config file: " << cli.config << "\n";
      return 2;
    }
    doc = nlohmann::json::parse(is);
  } else {
    std::cerr << "error: " << kind << " needs --config or --preset\n";
    return 2;
  }
  if (!doc.is_object() || !doc.contains("kind") ||
      !doc.at("kind").is_string()) {
    std::cerr << "error: config must be an object with a string 'kind'\n";
    return 2;
  }
  if (doc.at("kind").get<std::string>() != kind) {
    std::cerr << "error: config kind '" << doc.at("kind").get<std::string>()
              << "' does not match subcommand '" << kind << "'\n";
    return 2;
  }
  if (sub.count("--seed") > 0) doc["seed"] = cli.seed;
  if (sub.count("--jobs") > 0) doc["jobs"] = cli.jobs;
  if (sub.count("--out") > 0) doc["out"] = cli.out;

  const mec::ExperimentConfig cfg = mec::parse_config(doc);
  const mec::RunOutcome outcome = mec::run_experiment(cfg);
  if (cfg.out.empty()) {
    outcome.table.write_csv(std::cout);
  } else {
    outcome.table.write_csv(cfg.out);
    std::cerr << "wrote " << cfg.out << " (" << outcome.table.n_rows()
              << " rows)\n";
  }
  if (!outcome.message.empty()) std::cerr << outcome.message << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average-age analysis and equilibrium offloading policies for "
               "edge-computing device networks"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"aoi", "Analytic average age of one device model"},
      {"simulate", "Event-driven network simulation with batch-means CIs"},
      {"mfe", "Mean-field equilibrium of the shared-edge population"},
      {"nash", "Cyclic best-response equilibrium of a finite population"},
      {"mm-mfe", "Major-minor equilibrium: priority device + population"},
      {"sweep", "Cross-product parameter sweep of a base experiment"},
      {"validate", "Analytic-vs-simulated cross-checks with z-scores"},
  };

  Cli cli;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : kinds) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", cli.config, "JSON experiment config");
    sub->add_option("--out", cli.out, "output CSV path (default from config)");
    sub->add_option("--seed", cli.seed, "master seed override");
    sub->add_option("--jobs", cli.jobs, "parallel workers (<=1 serial)");
    sub->add_option("--preset", cli.preset, "built-in study preset name");
    subs.push_back(sub);
  }
  CLI::App* list = app.add_subcommand("list-presets", "List built-in presets");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& name : mec::preset_names()) {
      const nlohmann::json doc = mec::preset_config(name);
      std::cout << name << " - " << doc.value("description", "") << "\n";
    }
    return 0;
  }

  try {
    for (std::size_t i = 0; i < kinds.size(); ++i)
      if (subs[i]->parsed()) return run(kinds[i].first, cli, *subs[i]);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mec::DegenerateSimulation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
