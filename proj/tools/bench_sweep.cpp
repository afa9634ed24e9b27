// Benchmark: serial vs parallel execution of a built-in sweep, asserting
// that both produce byte-identical CSVs.  Usage: bench_sweep [preset] [jobs].
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "mec/experiments.hpp"

namespace {

double run_once(const std::string& preset, int jobs, std::string* csv) {
  nlohmann::json doc = mec::preset_config(preset);
  doc["jobs"] = jobs;
  const mec::ExperimentConfig cfg = mec::parse_config(doc);
  const auto t0 = std::chrono::steady_clock::now();
  const mec::RunOutcome out = mec::run_experiment(cfg);
  const auto t1 = std::chrono::steady_clock::now();
  std::ostringstream os;
  out.table.write_csv(os);
  *csv = os.str();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string preset = argc > 1 ? argv[1] : "mfe-load";
  const int jobs = argc > 2 ? std::atoi(argv[2]) : 4;

  std::string serial_csv, parallel_csv;
  const double t_serial = run_once(preset, 1, &serial_csv);
  std::cout << "serial   (jobs=1): " << t_serial << " s\n";
  const double t_parallel = run_once(preset, jobs, &parallel_csv);
  std::cout << "parallel (jobs=" << jobs << "): " << t_parallel << " s  ("
            << t_serial / t_parallel << "x)\n";

  if (serial_csv != parallel_csv) {
    std::cerr << "FAIL: serial and parallel CSVs differ\n";
    return 1;
  }
  std::cout << "CSV bytes identical across jobs settings\n";
  return 0;
}
