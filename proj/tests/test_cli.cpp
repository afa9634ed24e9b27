// Tests for the experiment layer and the command-line binary: CSV
// round-trips, config fingerprints, presets, deterministic sweeps, and the
// exit-code contract of the installed-style executable (driven through
// MEC_CLI_BIN, which the build sets to the freshly built binary).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "mec/experiments.hpp"
#include "mec/shs.hpp"
#include "mec/table.hpp"

using namespace mec;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Scratch directory for files the CLI writes; removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mec-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  const char* bin = std::getenv("MEC_CLI_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "MEC_CLI_BIN must point at the built binary");
  const std::string cmd = std::string(bin) + " " + args;
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
  REQUIRE(os.good());
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

// ------------------------------------------------------------ result table

TEST_CASE("CSV round trip reproduces every double bit-for-bit") {
  ResultTable t({"a", "b", "c"}, std::string("point"));
  t.set_meta("kind", "unit-test");
  t.set_meta("note", "covers awkward values");
  const std::vector<std::vector<double>> rows = {
      {1.0 / 3.0, 1e300, -0.0},
      {0.1, 5e-300, 123456789.123456789},
      {-2.5000000000000004, 1.7976931348623157e308, 2.2250738585072014e-308},
  };
  t.add_row("first", rows[0]);
  t.add_row("second", rows[1]);
  t.add_row("third", rows[2]);

  std::stringstream ss;
  t.write_csv(ss);
  const ResultTable back = ResultTable::read_csv(ss);

  REQUIRE(back.n_rows() == 3);
  REQUIRE(back.columns() == t.columns());
  REQUIRE(back.label_column().has_value());
  CHECK(*back.label_column() == "point");
  CHECK(back.meta().at("kind") == "unit-test");
  for (int r = 0; r < 3; ++r) {
    CHECK(back.label(r) == t.label(r));
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      // Bit-exactness, including the sign of -0.0.
      CHECK(std::signbit(back.row(r)[c]) == std::signbit(rows[r][c]));
      CHECK(back.row(r)[c] == rows[r][c]);
    }
  }

  // A second serialization of the parsed table is byte-identical.
  std::stringstream again;
  back.write_csv(again);
  std::stringstream first;
  t.write_csv(first);
  CHECK(again.str() == first.str());
}

TEST_CASE("NaN cells survive the round trip (failed sweep points)") {
  ResultTable t({"x", "y"});
  t.add_row({1.0, std::nan("")});
  std::stringstream ss;
  t.write_csv(ss);
  const ResultTable back = ResultTable::read_csv(ss);
  CHECK(back.row(0)[0] == 1.0);
  CHECK(std::isnan(back.row(0)[1]));
}

TEST_CASE("tables reject tokens that would corrupt the format") {
  CHECK_THROWS_AS(ResultTable({"a,b"}), std::invalid_argument);
  CHECK_THROWS_AS(ResultTable({"a\nb"}), std::invalid_argument);
  ResultTable t({"v"}, std::string("name"));
  CHECK_THROWS_AS(t.add_row("bad,label", {1}), std::invalid_argument);
  CHECK_THROWS_AS(t.add_row("12.5", {1}), std::invalid_argument);  // looks numeric
  CHECK_THROWS_AS(t.set_meta("key: colon", "v"), std::invalid_argument);
  CHECK_THROWS_AS(t.set_meta("key", "line\nbreak"), std::invalid_argument);
  CHECK_THROWS_AS(t.add_row("ok", {1, 2}), std::invalid_argument);  // width
}

TEST_CASE("malformed CSV input is rejected") {
  std::stringstream missing_cell("a,b\n1.0\n");
  CHECK_THROWS_AS(ResultTable::read_csv(missing_cell), std::runtime_error);
  std::stringstream bad_number("a,b\n1.0,zebra\n");
  CHECK_THROWS_AS(ResultTable::read_csv(bad_number), std::runtime_error);
}

// ------------------------------------------------------------- experiments

TEST_CASE("config fingerprint tracks semantics, not presentation") {
  const json doc = preset_config("fig7");
  const ExperimentConfig base = parse_config(doc);

  json reseeded = doc;
  reseeded["seed"] = 999;
  CHECK(parse_config(reseeded).hash() != base.hash());

  json cosmetic = doc;
  cosmetic["out"] = "elsewhere.csv";
  cosmetic["jobs"] = 7;
  cosmetic["description"] = "reworded";
  CHECK(parse_config(cosmetic).hash() == base.hash());

  json reordered;  // same keys inserted in a different order
  for (auto it = doc.rbegin(); it != doc.rend(); ++it)
    reordered[it.key()] = it.value();
  CHECK(parse_config(reordered).hash() == base.hash());
}

TEST_CASE("config parsing enforces kinds and integer seeds") {
  CHECK_THROWS_AS(parse_config(json{{"kind", "frobnicate"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"seed": 1.5, "kind": "aoi"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(json::array()), std::invalid_argument);

  // 64-bit seeds must survive parsing exactly.
  const auto big = json::parse(R"({"kind": "aoi", "seed": 18446744073709551615,
    "topology": "equitable",
    "rates": {"lambda": 1, "p": 0.5, "mu1": 1, "mu2": 1, "mu3": 15}})");
  CHECK(parse_config(big).seed == 18446744073709551615ULL);
}

TEST_CASE("every preset parses and the catalog is complete") {
  const std::vector<std::string> names = preset_names();
  const std::vector<std::string> want = {
      "fig7",     "mfe-load",   "fig9",        "mfe-arrival", "ne-vs-mfe",
      "fig10",    "mm-arrival", "utilization", "validate"};
  CHECK(names == want);
  for (const std::string& n : names) {
    CAPTURE(n);
    const ExperimentConfig cfg = parse_config(preset_config(n));
    CHECK(!cfg.kind.empty());
    CHECK(cfg.doc.at("preset") == n);
  }
  CHECK_THROWS_AS(preset_config("fig42"), std::invalid_argument);
}

TEST_CASE("aoi experiment reports exactly the library's answer") {
  const auto doc = json::parse(R"({
    "kind": "aoi", "seed": 5, "topology": "equitable",
    "rates": {"lambda": 10, "p": 0.5, "mu1": 1, "mu2": 0.8,
              "mu3": 15, "lambda_e": 5}})");
  const RunOutcome out = run_experiment(parse_config(doc));
  CHECK(out.exit_code == 0);
  REQUIRE(out.table.n_rows() == 1);
  const double direct =
      average_aoi(build_equitable_model({10, .5, 1, .8, 15, 5}));
  CHECK(out.table.at(0, "aoi") == direct);
  CHECK(out.table.label(0) == "equitable");
  CHECK(out.table.meta().at("kind") == "aoi");
  CHECK(out.table.meta().at("toolkit_version") == kToolkitVersion);
  CHECK(out.table.meta().count("config_hash") == 1);
}

TEST_CASE("sweeps are byte-identical across worker counts") {
  auto doc = json::parse(R"({
    "kind": "sweep", "seed": 11,
    "axes": [{"param": "/types/0/lambda", "values": [1.0, 2.0, 4.0]}],
    "base": {
      "kind": "mfe", "n_devices": 2, "mu3": 15.0,
      "types": [{"weight": 1.0, "lambda": 1.0, "V": 10.0, "eta": 0.5,
                 "P_max": 1.0, "f_max": 0.8}],
      "solver": {"multi_start": 2}
    }})");
  doc["jobs"] = 1;
  const RunOutcome serial = run_experiment(parse_config(doc));
  doc["jobs"] = 4;
  const RunOutcome parallel = run_experiment(parse_config(doc));
  CHECK(serial.exit_code == 0);
  CHECK(parallel.exit_code == 0);

  std::stringstream a, b;
  serial.table.write_csv(a);
  parallel.table.write_csv(b);
  CHECK(a.str() == b.str());
  REQUIRE(serial.table.n_rows() == 3);
  // The swept parameter is echoed as the leading column.
  CHECK(serial.table.at(0, "types.0.lambda") == 1.0);
  CHECK(serial.table.at(2, "types.0.lambda") == 4.0);
}

TEST_CASE("sweep points get decorrelated seeds, not copies of the master") {
  auto doc = json::parse(R"({
    "kind": "sweep", "seed": 21,
    "axes": [{"param": "/network/horizon", "values": [4000.0, 4000.0]}],
    "base": {
      "kind": "simulate",
      "network": {"topology": "equitable-faithful", "horizon": 1000.0,
        "devices": [{"lambda": 10, "p": 0.5, "mu1": 1, "mu2": 0.8,
                     "mu3": 15, "lambda_e": 5}]}
    }})");
  const RunOutcome out = run_experiment(parse_config(doc));
  REQUIRE(out.table.n_rows() == 2);
  // Identical parameters but per-point seeds: distinct estimates.
  CHECK(out.table.at(0, "aoi_mean") != out.table.at(1, "aoi_mean"));
}

// ------------------------------------------------------- the binary itself

TEST_CASE("list-presets names every built-in study") {
  TempDir tmp;
  const std::string out = tmp.file("presets.txt");
  CHECK(run_cli("list-presets > " + out) == 0);
  const std::string text = slurp(out);
  for (const std::string& n : preset_names())
    CHECK(text.find(n) != std::string::npos);
}

TEST_CASE("a valid config file runs to a readable CSV") {
  TempDir tmp;
  const std::string cfg = tmp.file("aoi.json");
  const std::string out = tmp.file("aoi.csv");
  write_file(cfg, R"({
    "kind": "aoi", "seed": 5, "topology": "primary",
    "rates": {"lambda_P": 4, "p_P": 0.5, "mu1P": 2, "mu2P": 0.5, "mu3": 15}})");
  CHECK(run_cli("aoi --config " + cfg + " --out " + out + " 2>/dev/null") == 0);
  const ResultTable table = ResultTable::read_csv(out);
  REQUIRE(table.n_rows() == 1);
  CHECK(table.at(0, "aoi") == primary_aoi({4, .5, 2, .5, 15}));
  CHECK(table.meta().at("seed") == "5");

  // Without --out the same table goes to stdout.
  const std::string piped = tmp.file("piped.csv");
  CHECK(run_cli("aoi --config " + cfg + " > " + piped + " 2>/dev/null") == 0);
  CHECK(ResultTable::read_csv(piped).at(0, "aoi") == table.at(0, "aoi"));

  // --seed overrides the file's seed (and lands in the metadata echo).
  const std::string reseeded = tmp.file("reseeded.csv");
  CHECK(run_cli("aoi --config " + cfg + " --seed 77 --out " + reseeded +
                " 2>/dev/null") == 0);
  CHECK(ResultTable::read_csv(reseeded).meta().at("seed") == "77");
}

TEST_CASE("config and command kinds must agree") {
  TempDir tmp;
  const std::string cfg = tmp.file("aoi.json");
  write_file(cfg, R"({
    "kind": "aoi", "topology": "equitable",
    "rates": {"lambda": 1, "p": 0.5, "mu1": 1, "mu2": 1, "mu3": 15}})");
  CHECK(run_cli("mfe --config " + cfg + " 2>/dev/null") == 2);
  // A preset of the wrong kind is the same mistake.
  CHECK(run_cli("aoi --preset fig7 2>/dev/null") == 2);
}

TEST_CASE("usage errors exit with code 2") {
  TempDir tmp;
  CHECK(run_cli("mfe 2>/dev/null") == 2);  // neither --config nor --preset
  CHECK(run_cli("mfe --preset no-such-study 2>/dev/null") == 2);
  const std::string cfg = tmp.file("both.json");
  write_file(cfg, R"({"kind": "mfe"})");
  CHECK(run_cli("mfe --config " + cfg + " --preset fig7 2>/dev/null") == 2);
  const std::string broken = tmp.file("broken.json");
  write_file(broken, "{ not json");
  CHECK(run_cli("mfe --config " + broken + " 2>/dev/null") == 2);

  const std::string empty_axis = tmp.file("empty-axis.json");
  write_file(empty_axis, R"({
    "kind": "sweep",
    "axes": [{"param": "/mu3", "from": 1.0, "to": 0.0, "step": 1.0}],
    "base": {"kind": "mfe", "n_devices": 2, "mu3": 15.0,
      "types": [{"weight": 1, "lambda": 1, "V": 0, "eta": 0.5,
                 "P_max": 1, "f_max": 1}]}})");
  CHECK(run_cli("sweep --config " + empty_axis + " 2>/dev/null") == 2);
}

TEST_CASE("a simulation that cannot deliver exits with code 4") {
  TempDir tmp;
  const std::string cfg = tmp.file("degenerate.json");
  write_file(cfg, R"({
    "kind": "simulate", "seed": 1,
    "network": {"topology": "equitable-faithful", "horizon": 1.0,
      "devices": [{"lambda": 0.001, "p": 0.5, "mu1": 1, "mu2": 1,
                   "mu3": 15}]}})");
  CHECK(run_cli("simulate --config " + cfg + " 2>/dev/null") == 4);
}

TEST_CASE("running a preset end to end writes its named CSV") {
  TempDir tmp;
  const char* bin = std::getenv("MEC_CLI_BIN");
  REQUIRE(bin != nullptr);
  // Presets write relative paths; run from inside the scratch directory.
  const std::string cmd = "cd " + tmp.path.string() + " && " + bin +
                          " mfe --preset fig7 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  const ResultTable table = ResultTable::read_csv(tmp.file("fig7.csv"));
  CHECK(table.n_rows() == 11);
  CHECK(table.meta().at("preset") == "fig7");
}
