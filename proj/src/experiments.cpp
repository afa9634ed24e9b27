#include "mec/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mec/costs.hpp"
#include "mec/descent.hpp"
#include "mec/parallel.hpp"
#include "mec/rng.hpp"
#include "mec/solvers.hpp"

// Config plumbing and experiment drivers.  Determinism rules used
// throughout: sweep points and validation checkpoints derive their seeds
// from the master seed and their index, results are assembled in index
// order, and nested runs are forced serial — so serial and parallel
// executions of the same config produce identical bytes.

namespace mec {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument(what);
}

// ------------------------------------------------------- JSON field access

const json& member(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    bad("config field '" + key + "' is required");
  return j.at(key);
}

double num_at(const json& j, const std::string& key) {
  const json& v = member(j, key);
  if (!v.is_number()) bad("config field '" + key + "' must be a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& key, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return num_at(j, key);
}

int to_int(double v, const std::string& key) {
  const double r = std::nearbyint(v);
  if (!(std::abs(v - r) <= 1e-9) || std::abs(r) > 1e9)
    bad("config field '" + key + "' must be an integer");
  return static_cast<int>(r);
}

int int_at(const json& j, const std::string& key) {
  return to_int(num_at(j, key), key);
}

int int_or(const json& j, const std::string& key, int dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return int_at(j, key);
}

bool bool_or(const json& j, const std::string& key, bool dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_boolean()) bad("config field '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string str_at(const json& j, const std::string& key) {
  const json& v = member(j, key);
  if (!v.is_string()) bad("config field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t seed_or(const json& j, const std::string& key,
                      std::uint64_t dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  bad("config field '" + key + "' must be a nonnegative integer");
}

// --------------------------------------------------- struct-level parsers

DevicePolicy parse_policy(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() ||
      !v[1].is_number() || !v[2].is_number())
    bad("config field '" + key + "' must be [p, mu1, mu2]");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

TypeProfile parse_type(const json& j, int index) {
  TypeProfile tp;
  tp.id = int_or(j, "id", index);
  tp.weight = num_or(j, "weight", 1.0);
  tp.lambda = num_at(j, "lambda");
  tp.V = num_at(j, "V");
  tp.eta = num_at(j, "eta");
  tp.P_max = num_or(j, "P_max", 0.0);  // devices without a transmitter
  tp.f_max = num_at(j, "f_max");
  tp.validate();
  return tp;
}

std::vector<TypeProfile> parse_types(const json& doc) {
  const json& arr = member(doc, "types");
  if (!arr.is_array() || arr.empty())
    bad("config field 'types' must be a non-empty array");
  std::vector<TypeProfile> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(parse_type(arr[i], static_cast<int>(i)));
  return out;
}

PrimaryParams parse_primary_params(const json& j) {
  PrimaryParams pp;
  pp.lambda_P = num_at(j, "lambda_P");
  pp.V = num_at(j, "V");
  pp.eta = num_at(j, "eta");
  pp.P_max = num_at(j, "P_max");
  pp.f_max = num_at(j, "f_max");
  pp.mu3 = num_at(j, "mu3");
  pp.validate();
  return pp;
}

SolverConfig parse_solver(const ExperimentConfig& cfg) {
  const json s = cfg.doc.is_object() ? cfg.doc.value("solver", json::object())
                                     : json::object();
  SolverConfig sc;
  sc.eps1 = num_or(s, "eps1", sc.eps1);
  sc.eps2 = num_or(s, "eps2", sc.eps2);
  sc.eps3 = num_or(s, "eps3", sc.eps3);
  sc.gamma1 = num_or(s, "gamma1", sc.gamma1);
  sc.gamma2 = num_or(s, "gamma2", sc.gamma2);
  sc.gamma3 = num_or(s, "gamma3", sc.gamma3);
  sc.fd_h = num_or(s, "fd_h", sc.fd_h);
  sc.max_outer = int_or(s, "max_outer", sc.max_outer);
  sc.max_inner = int_or(s, "max_inner", sc.max_inner);
  sc.multi_start = int_or(s, "multi_start", sc.multi_start);
  sc.rho0 = num_or(s, "rho0", sc.rho0);
  if (s.contains("init_primary"))
    sc.init_primary = parse_policy(s.at("init_primary"), "solver.init_primary");
  if (s.contains("init_secondary"))
    sc.init_secondary =
        parse_policy(s.at("init_secondary"), "solver.init_secondary");
  sc.seed = cfg.seed;
  sc.jobs = cfg.jobs;
  sc.validate();
  return sc;
}

EquitableRates parse_equitable_rates(const json& j) {
  EquitableRates r;
  r.lambda = num_at(j, "lambda");
  r.p = num_at(j, "p");
  r.mu1 = num_at(j, "mu1");
  r.mu2 = num_at(j, "mu2");
  r.mu3 = num_at(j, "mu3");
  r.lambda_e = num_or(j, "lambda_e", 0.0);
  r.validate();
  return r;
}

PrimaryRates parse_primary_rates(const json& j) {
  PrimaryRates r;
  r.lambda_P = num_at(j, "lambda_P");
  r.p_P = num_at(j, "p_P");
  r.mu1P = num_at(j, "mu1P");
  r.mu2P = num_at(j, "mu2P");
  r.mu3 = num_at(j, "mu3");
  r.validate();
  return r;
}

SecondaryRates parse_secondary_rates(const json& j) {
  SecondaryRates r;
  r.lambda = num_at(j, "lambda");
  r.p = num_at(j, "p");
  r.mu2 = num_at(j, "mu2");
  r.mu1 = num_at(j, "mu1");
  r.mu3 = num_at(j, "mu3");
  r.lambda_e = num_or(j, "lambda_e", 0.0);
  r.lambda_P_bar = num_or(j, "lambda_P_bar", 0.0);
  r.validate();
  return r;
}

NetworkSpec parse_network(const json& j, std::uint64_t seed) {
  NetworkSpec spec;
  spec.topology = topology_from_string(str_at(j, "topology"));
  if (j.contains("devices")) {
    const json& arr = j.at("devices");
    if (!arr.is_array()) bad("config field 'devices' must be an array");
    for (const auto& d : arr)
      spec.equitable.push_back(parse_equitable_rates(d));
  }
  if (j.contains("primary")) spec.primary = parse_primary_rates(j.at("primary"));
  if (j.contains("secondary")) {
    const json& arr = j.at("secondary");
    if (!arr.is_array()) bad("config field 'secondary' must be an array");
    for (const auto& d : arr)
      spec.secondary.push_back(parse_secondary_rates(d));
  }
  spec.horizon = num_at(j, "horizon");
  spec.seed = seed;
  spec.validate();
  return spec;
}

// -------------------------------------------------------------- utilities

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void attach_meta(ResultTable& t, const ExperimentConfig& cfg) {
  t.set_meta("toolkit_version", kToolkitVersion);
  t.set_meta("kind", cfg.kind);
  if (cfg.doc.is_object() && cfg.doc.contains("preset") &&
      cfg.doc.at("preset").is_string())
    t.set_meta("preset", cfg.doc.at("preset").get<std::string>());
  t.set_meta("config_hash", hex16(cfg.hash()));
  t.set_meta("seed", std::to_string(cfg.seed));
}

DevicePolicy box_midpoint(const PolicyBounds& b) {
  return {0.5 * (b.lo.p + b.hi.p), 0.5 * (b.lo.mu1 + b.hi.mu1),
          0.5 * (b.lo.mu2 + b.hi.mu2)};
}

double policy_power(const CostBreakdown& c) {
  return c.transmit_power + c.local_power;
}

double policy_aoi(const CostBreakdown& c, double V) {
  return V > 0.0 ? c.weighted_aoi / V : kNaN;
}

// ------------------------------------------------------------ experiment: aoi

RunOutcome run_aoi(const ExperimentConfig& cfg) {
  const std::string topo = str_at(cfg.doc, "topology");
  const json& rates = member(cfg.doc, "rates");
  ShsModel model;
  double aoi = 0.0;
  if (topo == "equitable") {
    model = build_equitable_model(parse_equitable_rates(rates));
    aoi = average_aoi(model);
  } else if (topo == "primary") {
    const PrimaryRates r = parse_primary_rates(rates);
    model = build_primary_model(r);
    aoi = primary_aoi(r);
  } else if (topo == "secondary") {
    model = build_secondary_model(parse_secondary_rates(rates));
    aoi = average_aoi(model);
  } else {
    bad("config field 'topology' must be equitable, primary or secondary");
  }
  const SteadyState ss = solve_steady_state(model);

  std::vector<std::string> columns = {"aoi"};
  for (int s = 0; s < model.n_states(); ++s)
    columns.push_back("pi" + std::to_string(s));
  RunOutcome out{ResultTable(columns, std::string("topology")), 0, "", {}};
  std::vector<double> row = {aoi};
  row.insert(row.end(), ss.pi.begin(), ss.pi.end());
  out.table.add_row(topo, row);
  attach_meta(out.table, cfg);
  out.summary = {{"aoi", aoi}};
  return out;
}

// ------------------------------------------------------- experiment: simulate

RunOutcome run_simulate(const ExperimentConfig& cfg) {
  const NetworkSpec spec = parse_network(member(cfg.doc, "network"), cfg.seed);
  const SimEstimate est = simulate(spec);

  RunOutcome out{ResultTable({"aoi", "ci95", "ci3sigma", "deliveries"},
                             std::string("device")),
                 0,
                 "",
                 {}};
  double aoi_sum = 0.0;
  double deliveries_min = std::numeric_limits<double>::infinity();
  for (const auto& d : est.devices) {
    out.table.add_row(d.device, {d.aoi, d.ci95, d.ci3sigma,
                                 static_cast<double>(d.deliveries)});
    aoi_sum += d.aoi;
    deliveries_min =
        std::min(deliveries_min, static_cast<double>(d.deliveries));
  }
  attach_meta(out.table, cfg);
  out.summary = {{"aoi_mean", aoi_sum / est.devices.size()},
                 {"deliveries_min", deliveries_min}};
  return out;
}

// ------------------------------------------------------------ experiment: mfe

// Exogenous-load response mode: no consistency update, one descent per grid
// value of rho.  This is how the offloading probability's dependence on the
// ambient edge load is read out.
RunOutcome run_mfe_rho_grid(const ExperimentConfig& cfg,
                            const std::vector<TypeProfile>& profiles,
                            int n_devices, double mu3,
                            const SolverConfig& sc) {
  if (profiles.size() != 1) bad("rho_grid mode expects exactly one type");
  const json& grid_json = cfg.doc.at("rho_grid");
  if (!grid_json.is_array() || grid_json.empty())
    bad("config field 'rho_grid' must be a non-empty array of numbers");
  std::vector<double> grid;
  for (const auto& v : grid_json) {
    if (!v.is_number()) bad("config field 'rho_grid' must contain numbers");
    grid.push_back(v.get<double>());
  }

  const TypeProfile tp = profiles[0];
  PolicyBounds box;
  box.lo = {0.0, 0.0, 0.0};
  box.hi = {1.0, tp.P_max, tp.f_max};
  const DevicePolicy init =
      sc.init_secondary ? project_box(*sc.init_secondary, box)
                        : box_midpoint(box);

  std::vector<DescentResult> results(grid.size());
  std::vector<std::string> errors(grid.size());
  run_points(
      static_cast<int>(grid.size()),
      [&](int i) {
        try {
          const double rho = grid[i];
          const auto objective = [&](const DevicePolicy& y) {
            return cost_mf_equitable(y, tp, rho, n_devices, mu3);
          };
          results[i] = block_descent(objective, init, box, sc);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      },
      sc.jobs);

  RunOutcome out{
      ResultTable({"rho", "p", "mu1", "mu2", "cost", "converged"}), 0, "", {}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!errors[i].empty())
      throw std::runtime_error("rho_grid point " + std::to_string(i) + ": " +
                               errors[i]);
    const DescentResult& r = results[i];
    out.table.add_row({grid[i], r.x.p, r.x.mu1, r.x.mu2, r.cost,
                       r.converged ? 1.0 : 0.0});
    if (!r.converged) {
      out.exit_code = 3;
      out.message = "descent did not converge at rho = " +
                    std::to_string(grid[i]);
    }
  }
  attach_meta(out.table, cfg);
  return out;  // a grid is not a flat summary; not sweepable
}

RunOutcome run_mfe(const ExperimentConfig& cfg) {
  const auto profiles = parse_types(cfg.doc);
  const int n_devices = int_at(cfg.doc, "n_devices");
  const double mu3 = num_at(cfg.doc, "mu3");
  const SolverConfig sc = parse_solver(cfg);
  if (cfg.doc.contains("rho_grid"))
    return run_mfe_rho_grid(cfg, profiles, n_devices, mu3, sc);

  const EquilibriumResult res = mfe_solve(profiles, n_devices, mu3, sc);

  RunOutcome out{ResultTable({"weight", "p", "mu1", "mu2", "cost", "power",
                              "aoi", "rho", "residual", "iterations",
                              "converged"},
                             std::string("type")),
                 0,
                 "",
                 {}};
  double wsum = 0.0, cost = 0.0, power = 0.0, aoi = 0.0;
  for (std::size_t t = 0; t < profiles.size(); ++t) {
    const auto& x = res.type_policies[t];
    const auto& c = res.type_costs[t];
    out.table.add_row("type" + std::to_string(profiles[t].id),
                      {profiles[t].weight, x.p, x.mu1, x.mu2, c.total,
                       policy_power(c), policy_aoi(c, profiles[t].V), res.rho,
                       res.residual, static_cast<double>(res.iterations),
                       res.converged ? 1.0 : 0.0});
    wsum += profiles[t].weight;
    cost += profiles[t].weight * c.total;
    power += profiles[t].weight * policy_power(c);
    aoi += profiles[t].weight * policy_aoi(c, profiles[t].V);
  }
  attach_meta(out.table, cfg);
  out.summary = {{"rho", res.rho},
                 {"residual", res.residual},
                 {"iterations", static_cast<double>(res.iterations)},
                 {"converged", res.converged ? 1.0 : 0.0},
                 {"p", res.type_policies[0].p},
                 {"mu1", res.type_policies[0].mu1},
                 {"mu2", res.type_policies[0].mu2},
                 {"cost", cost / wsum},
                 {"power", power / wsum},
                 {"aoi", aoi / wsum}};
  if (!res.converged) {
    out.exit_code = 3;
    out.message = "mean-field iteration left a residual of " +
                  std::to_string(res.residual);
  }
  return out;
}

// ----------------------------------------------------------- experiment: nash

RunOutcome run_nash(const ExperimentConfig& cfg) {
  const auto types = parse_types(cfg.doc);
  const int n_devices = int_or(cfg.doc, "n_devices",
                               static_cast<int>(types.size()));
  std::vector<TypeProfile> devices;
  if (static_cast<int>(types.size()) == n_devices)
    devices = types;
  else if (types.size() == 1 && n_devices > 1)
    devices.assign(n_devices, types[0]);
  else
    bad("config field 'n_devices' must match 'types' (or give one type to "
        "replicate)");
  const double mu3 = num_at(cfg.doc, "mu3");
  const SolverConfig sc = parse_solver(cfg);

  const NashResult ne = nash_solve(devices, mu3, sc);
  double j_ne = 0.0;
  for (const auto& c : ne.costs) j_ne += c.total;
  j_ne /= static_cast<double>(ne.costs.size());

  if (!bool_or(cfg.doc, "compare_mfe", false)) {
    RunOutcome out{ResultTable({"p", "mu1", "mu2", "cost"},
                               std::string("device")),
                   0,
                   "",
                   {}};
    for (std::size_t i = 0; i < devices.size(); ++i)
      out.table.add_row("device" + std::to_string(i),
                        {ne.policies[i].p, ne.policies[i].mu1,
                         ne.policies[i].mu2, ne.costs[i].total});
    attach_meta(out.table, cfg);
    out.summary = {{"converged", ne.converged ? 1.0 : 0.0},
                   {"cycles", static_cast<double>(ne.cycles)},
                   {"J_ne", j_ne},
                   {"p", ne.policies[0].p},
                   {"mu1", ne.policies[0].mu1},
                   {"mu2", ne.policies[0].mu2}};
    if (!ne.converged) {
      out.exit_code = 3;
      out.message = "best-response cycling did not settle (max change " +
                    std::to_string(ne.max_change) + ")";
    }
    return out;
  }

  // Comparison mode: solve the mean-field problem for the same population
  // and price its policy inside the finite game.
  if (types.size() != 1) bad("compare_mfe expects exactly one type");
  const EquilibriumResult mf = mfe_solve(types, n_devices, mu3, sc);
  const DevicePolicy xm = mf.type_policies[0];
  const std::vector<OtherDevice> peers(
      n_devices - 1, OtherDevice{types[0].lambda, xm.p, xm.mu1});
  const double j_mfe = cost_equitable(xm, types[0], exogenous_rate(peers), mu3);
  const double gap_pct = std::abs(j_mfe - j_ne) / std::abs(j_ne) * 100.0;

  RunOutcome out{ResultTable({"n", "J_ne", "J_mfe", "gap_pct", "cycles",
                              "ne_converged", "rho", "mfe_converged"}),
                 0,
                 "",
                 {}};
  out.table.add_row({static_cast<double>(n_devices), j_ne, j_mfe, gap_pct,
                     static_cast<double>(ne.cycles), ne.converged ? 1.0 : 0.0,
                     mf.rho, mf.converged ? 1.0 : 0.0});
  attach_meta(out.table, cfg);
  out.summary = {{"J_ne", j_ne},
                 {"J_mfe", j_mfe},
                 {"gap_pct", gap_pct},
                 {"cycles", static_cast<double>(ne.cycles)},
                 {"ne_converged", ne.converged ? 1.0 : 0.0},
                 {"rho", mf.rho},
                 {"mfe_converged", mf.converged ? 1.0 : 0.0}};
  if (!ne.converged || !mf.converged) {
    out.exit_code = 3;
    out.message = "equilibrium comparison has a non-converged side";
  }
  return out;
}

// --------------------------------------------------------- experiment: mm-mfe

RunOutcome run_mm(const ExperimentConfig& cfg) {
  const PrimaryParams pp = parse_primary_params(member(cfg.doc, "primary"));
  const auto profiles = parse_types(cfg.doc);
  const int n_devices = int_at(cfg.doc, "n_devices");
  const double alpha = num_at(cfg.doc, "alpha");
  const SolverConfig sc = parse_solver(cfg);

  std::vector<std::string> phases = {"shared"};
  if (cfg.doc.contains("phases")) {
    if (!cfg.doc.at("phases").is_array())
      bad("config field 'phases' must be an array");
    phases.clear();
    for (const auto& ph : cfg.doc.at("phases")) {
      if (!ph.is_string() ||
          (ph.get<std::string>() != "solo" && ph.get<std::string>() != "shared"))
        bad("config field 'phases' must list \"solo\" and/or \"shared\"");
      phases.push_back(ph.get<std::string>());
    }
    if (phases.empty()) bad("config field 'phases' must be non-empty");
  }

  RunOutcome out{ResultTable({"p_P", "mu1P", "mu2P", "J_P", "t_tp1", "t_tp2",
                              "t_tp", "revenue", "rho", "residual",
                              "iterations", "converged", "p_phi", "mu2_phi",
                              "J_phi"},
                             std::string("phase")),
                 0,
                 "",
                 {}};
  double wsum = 0.0;
  for (const auto& tp : profiles) wsum += tp.weight;

  for (const std::string& phase : phases) {
    if (phase == "solo") {
      // The priority device alone: no demand to sell, plain policy descent.
      PolicyBounds box;
      box.lo = {0.0, 0.0, 0.0};
      box.hi = {1.0, pp.P_max, pp.f_max};
      const DevicePolicy init =
          sc.init_primary ? project_box(*sc.init_primary, box)
                          : box_midpoint(box);
      const auto objective = [&](const DevicePolicy& y) {
        return cost_primary(y, pp, 0.0, alpha);
      };
      const DescentResult r = block_descent(objective, init, box, sc);
      const double t1 = busy_tp_priority(pp.lambda_P, r.x.p, r.x.mu1);
      out.table.add_row(
          "solo", {r.x.p, r.x.mu1, r.x.mu2, r.cost, t1, 0.0, t1, 0.0, kNaN,
                   kNaN, static_cast<double>(r.sweeps),
                   r.converged ? 1.0 : 0.0, kNaN, kNaN, kNaN});
      if (!r.converged) {
        out.exit_code = 3;
        out.message = "solo policy descent did not converge";
      }
      continue;
    }

    const EquilibriumResult res =
        mm_mfe_solve(pp, profiles, n_devices, alpha, sc);
    const DevicePolicy& xp = res.primary_policy;
    const double lambda_s = n_devices * xp.mu1 * res.rho;
    const double t1 = busy_tp_priority(pp.lambda_P, xp.p, xp.mu1);
    const double t2 = busy_tp_secondary(lambda_s, pp.lambda_P, xp.p, xp.mu1);
    double p_phi = 0.0, mu2_phi = 0.0, j_phi = 0.0;
    for (std::size_t t = 0; t < profiles.size(); ++t) {
      p_phi += profiles[t].weight * res.type_policies[t].p;
      mu2_phi += profiles[t].weight * res.type_policies[t].mu2;
      j_phi += profiles[t].weight * res.type_costs[t].total;
    }
    p_phi /= wsum;
    mu2_phi /= wsum;
    j_phi /= wsum;
    out.table.add_row(
        "shared",
        {xp.p, xp.mu1, xp.mu2, res.primary_cost.total, t1, t2, t1 + t2,
         res.primary_cost.revenue, res.rho, res.residual,
         static_cast<double>(res.iterations), res.converged ? 1.0 : 0.0,
         p_phi, mu2_phi, j_phi});
    out.summary = {{"rho", res.rho},
                   {"residual", res.residual},
                   {"iterations", static_cast<double>(res.iterations)},
                   {"converged", res.converged ? 1.0 : 0.0},
                   {"p_P", xp.p},
                   {"mu1P", xp.mu1},
                   {"mu2P", xp.mu2},
                   {"J_P", res.primary_cost.total},
                   {"t_tp1", t1},
                   {"t_tp2", t2},
                   {"t_tp", t1 + t2},
                   {"p_phi", p_phi},
                   {"mu2_phi", mu2_phi},
                   {"J_phi", j_phi}};
    if (!res.converged) {
      out.exit_code = 3;
      out.message = "major-minor iteration left a residual of " +
                    std::to_string(res.residual);
    }
  }
  attach_meta(out.table, cfg);
  return out;
}

// ------------------------------------------------------- experiment: validate

RunOutcome run_validate(const ExperimentConfig& cfg) {
  const double target = num_or(cfg.doc, "target_deliveries", 1e6);
  if (!(std::isfinite(target) && target >= 1.0))
    bad("config field 'target_deliveries' must be >= 1");
  const auto points = validation_points();

  struct Row {
    double analytic = 0, simulated = 0, ci3 = 0, z = 0, deliveries = 0,
           horizon = 0;
    std::string err;
  };
  std::vector<Row> rows(points.size());
  run_points(
      static_cast<int>(points.size()),
      [&](int i) {
        try {
          NetworkSpec spec = points[i].spec;
          spec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
          spec.horizon = horizon_for_deliveries(spec, points[i].focal, target);
          const SimEstimate est = simulate(spec);
          const DeviceEstimate* focal = nullptr;
          for (const auto& d : est.devices)
            if (d.device == points[i].focal) focal = &d;
          if (focal == nullptr)
            throw std::runtime_error("focal device missing: " +
                                     points[i].focal);
          Row& r = rows[i];
          r.analytic = points[i].analytic;
          r.simulated = focal->aoi;
          r.ci3 = focal->ci3sigma;
          r.z = (focal->aoi - points[i].analytic) / (focal->ci3sigma / 3.0);
          r.deliveries = static_cast<double>(focal->deliveries);
          r.horizon = spec.horizon;
        } catch (const std::exception& e) {
          rows[i].err = e.what();
        }
      },
      cfg.jobs);

  RunOutcome out{ResultTable({"analytic", "simulated", "ci3sigma", "z",
                              "deliveries", "horizon"},
                             std::string("point")),
                 0,
                 "",
                 {}};
  double z_max = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!rows[i].err.empty())
      throw std::runtime_error("validation point " + points[i].name + ": " +
                               rows[i].err);
    const Row& r = rows[i];
    out.table.add_row(points[i].name, {r.analytic, r.simulated, r.ci3, r.z,
                                       r.deliveries, r.horizon});
    z_max = std::max(z_max, std::abs(r.z));
  }
  attach_meta(out.table, cfg);
  out.summary = {{"z_max", z_max}};
  if (z_max > 3.0) {
    out.exit_code = 3;
    out.message = "max |z| = " + std::to_string(z_max) + " exceeds 3";
  }
  return out;
}

// ---------------------------------------------------------- experiment: sweep

struct SweepAxis {
  json::json_pointer ptr;
  std::string column;
  std::vector<double> values;
};

SweepAxis parse_axis(const json& j, const json& base) {
  std::string param = str_at(j, "param");
  if (param.empty()) bad("sweep axis 'param' must be non-empty");
  if (param[0] != '/') param = "/" + param;
  SweepAxis axis;
  axis.ptr = json::json_pointer(param);
  if (!base.contains(axis.ptr))
    bad("unknown parameter in sweep axis: " + param);
  axis.column = param.substr(1);
  std::replace(axis.column.begin(), axis.column.end(), '/', '.');

  if (j.contains("values")) {
    const json& vals = j.at("values");
    if (!vals.is_array())
      bad("sweep axis 'values' must be an array of numbers");
    for (const auto& v : vals) {
      if (!v.is_number()) bad("sweep axis 'values' must contain numbers");
      axis.values.push_back(v.get<double>());
    }
  } else {
    const double from = num_at(j, "from");
    const double to = num_at(j, "to");
    const double step = num_at(j, "step");
    if (!(step > 0.0)) bad("sweep axis 'step' must be > 0");
    for (double v = from; v <= to + 1e-12 * std::max(1.0, std::abs(to));
         v += step)
      axis.values.push_back(v);
  }
  if (axis.values.empty()) bad("sweep axis range is empty");
  return axis;
}

RunOutcome run_sweep(const ExperimentConfig& cfg) {
  const json& base = member(cfg.doc, "base");
  if (!base.is_object()) bad("config field 'base' must be an object");
  const std::string base_kind = str_at(base, "kind");
  if (base_kind == "sweep" || base_kind == "validate")
    bad("sweep base must be a flat experiment (aoi, simulate, mfe, nash or "
        "mm-mfe)");
  const json& axes_json = member(cfg.doc, "axes");
  if (!axes_json.is_array() || axes_json.empty() || axes_json.size() > 2)
    bad("config field 'axes' must hold one or two axes");
  std::vector<SweepAxis> axes;
  for (const auto& a : axes_json) axes.push_back(parse_axis(a, base));

  const std::size_t n_inner = axes.size() == 2 ? axes[1].values.size() : 1;
  const std::size_t n_points = axes[0].values.size() * n_inner;

  struct Slot {
    std::vector<std::pair<std::string, double>> summary;
    bool ok = false;
    int code = 0;
    std::string err;
  };
  std::vector<Slot> slots(n_points);
  run_points(
      static_cast<int>(n_points),
      [&](int idx) {
        Slot& slot = slots[idx];
        try {
          json point = base;
          const std::size_t i0 = idx / n_inner, i1 = idx % n_inner;
          point[axes[0].ptr] = axes[0].values[i0];
          if (axes.size() == 2) point[axes[1].ptr] = axes[1].values[i1];
          point["seed"] = derive_seed(cfg.seed, static_cast<std::uint64_t>(idx));
          point["jobs"] = 1;  // parallelism lives at the point level
          const RunOutcome o = run_experiment(parse_config(point));
          if (o.summary.empty())
            throw std::invalid_argument(
                "sweep base produces no flat summary (is it a grid mode?)");
          slot.summary = o.summary;
          slot.code = o.exit_code;
          slot.ok = true;
        } catch (const DegenerateSimulation& e) {
          slot.code = 4;
          slot.err = e.what();
        } catch (const std::exception& e) {
          slot.code = 3;
          slot.err = e.what();
        }
      },
      cfg.jobs);

  // Columns: the axes, then the metric keys of the first healthy point.
  std::vector<std::string> columns;
  for (const auto& a : axes) columns.push_back(a.column);
  const Slot* reference = nullptr;
  for (const auto& s : slots)
    if (s.ok) {
      reference = &s;
      break;
    }
  if (reference != nullptr)
    for (const auto& [key, value] : reference->summary) columns.push_back(key);

  RunOutcome out{ResultTable(columns), 0, "", {}};
  for (std::size_t idx = 0; idx < n_points; ++idx) {
    std::vector<double> row;
    row.push_back(axes[0].values[idx / n_inner]);
    if (axes.size() == 2) row.push_back(axes[1].values[idx % n_inner]);
    const Slot& slot = slots[idx];
    if (reference != nullptr) {
      if (slot.ok && slot.summary.size() == reference->summary.size()) {
        for (const auto& [key, value] : slot.summary) row.push_back(value);
      } else {
        row.insert(row.end(), reference->summary.size(), kNaN);
      }
    }
    out.table.add_row(row);
    if (slot.code != 0) {
      out.exit_code = std::max(out.exit_code, slot.code);
      if (out.message.empty())
        out.message = "sweep point " + std::to_string(idx) +
                      (slot.err.empty() ? " did not converge" : ": " + slot.err);
    }
  }
  if (reference == nullptr) {
    out.exit_code = std::max(out.exit_code, 3);
    if (out.message.empty()) out.message = "every sweep point failed";
  }
  attach_meta(out.table, cfg);
  return out;
}

// ----------------------------------------------------------------- presets

struct Preset {
  const char* name;
  const char* text;
};

// Eight built-in studies plus the validation suite.  Values here are the
// documented defaults; everything can be overridden by editing a copy of
// the JSON (see configs/).
const Preset kPresets[] = {
    {"fig7", R"json({
  "kind": "mfe",
  "description": "Best-response policy of one device while the shared-edge load rho is held fixed on a grid: how aggressively should a device offload as the edge gets busier?",
  "seed": 1,
  "out": "fig7.csv",
  "n_devices": 2,
  "mu3": 15.0,
  "types": [{"weight": 1.0, "lambda": 1.0, "V": 10.0, "eta": 0.5, "P_max": 1.0, "f_max": 0.8}],
  "rho_grid": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
  "solver": {"multi_start": 1}
})json"},
    {"mfe-load", R"json({
  "kind": "sweep",
  "description": "Mean-field equilibrium surface over arrival rate and edge-server rate for a homogeneous population of 30 devices.",
  "seed": 2,
  "out": "mfe-load.csv",
  "axes": [
    {"param": "/types/0/lambda", "values": [1.0, 2.0, 4.0, 6.0, 8.0, 10.0]},
    {"param": "/mu3", "values": [5.0, 10.0, 15.0, 20.0]}
  ],
  "base": {
    "kind": "mfe",
    "n_devices": 30,
    "mu3": 15.0,
    "types": [{"weight": 1.0, "lambda": 1.0, "V": 10.0, "eta": 0.5, "P_max": 1.0, "f_max": 0.8}],
    "solver": {"multi_start": 4}
  }
})json"},
    {"fig9", R"json({
  "kind": "sweep",
  "description": "Power/age trade-off: equilibrium average power and average age of a 60-device population as the age weight V grows.",
  "seed": 3,
  "out": "fig9.csv",
  "axes": [{"param": "/types/0/V", "values": [1.0, 2.0, 5.0, 10.0, 30.0, 100.0]}],
  "base": {
    "kind": "mfe",
    "n_devices": 60,
    "mu3": 15.0,
    "types": [{"weight": 1.0, "lambda": 10.0, "V": 10.0, "eta": 0.02, "P_max": 1.0, "f_max": 0.8}],
    "solver": {"multi_start": 8}
  }
})json"},
    {"mfe-arrival", R"json({
  "kind": "sweep",
  "description": "Mean-field equilibrium surface over arrival rate and age weight for a homogeneous population of 30 devices.",
  "seed": 4,
  "out": "mfe-arrival.csv",
  "axes": [
    {"param": "/types/0/lambda", "values": [0.5, 1.0, 2.0, 4.0, 8.0]},
    {"param": "/types/0/V", "values": [1.0, 10.0, 100.0]}
  ],
  "base": {
    "kind": "mfe",
    "n_devices": 30,
    "mu3": 15.0,
    "types": [{"weight": 1.0, "lambda": 1.0, "V": 10.0, "eta": 0.5, "P_max": 1.0, "f_max": 0.8}],
    "solver": {"multi_start": 4}
  }
})json"},
    {"ne-vs-mfe", R"json({
  "kind": "sweep",
  "description": "Per-user cost of the finite-game Nash solution vs the mean-field policy evaluated in the same finite game, as the population grows.",
  "seed": 5,
  "out": "ne-vs-mfe.csv",
  "axes": [{"param": "/n_devices", "values": [30, 40, 50]}],
  "base": {
    "kind": "nash",
    "compare_mfe": true,
    "n_devices": 30,
    "mu3": 15.0,
    "types": [{"weight": 1.0, "lambda": 1.0, "V": 10.0, "eta": 0.5, "P_max": 1.0, "f_max": 0.8}],
    "solver": {"multi_start": 4}
  }
})json"},
    {"fig10", R"json({
  "kind": "sweep",
  "description": "Equilibrium response of the priority device and the secondary population to the access price alpha.",
  "seed": 6,
  "out": "fig10.csv",
  "axes": [{"param": "/alpha", "values": [0.0, 0.5, 1.0, 1.5, 2.0]}],
  "base": {
    "kind": "mm-mfe",
    "n_devices": 30,
    "alpha": 1.0,
    "primary": {"lambda_P": 4.0, "V": 10.0, "eta": 0.5, "P_max": 10.0, "f_max": 3.0, "mu3": 15.0},
    "types": [{"weight": 1.0, "lambda": 5.0, "V": 10.0, "eta": 0.5, "P_max": 0.0, "f_max": 1.5}],
    "solver": {"gamma1": 0.1, "multi_start": 1, "init_primary": [0.5, 0.6, 0.3], "init_secondary": [0.5, 0.0, 0.6]}
  }
})json"},
    {"mm-arrival", R"json({
  "kind": "sweep",
  "description": "Major-minor equilibrium surface over the priority and secondary arrival rates.",
  "seed": 7,
  "out": "mm-arrival.csv",
  "axes": [
    {"param": "/primary/lambda_P", "values": [1.0, 2.0, 4.0, 6.0]},
    {"param": "/types/0/lambda", "values": [0.5, 1.0, 2.0, 4.0]}
  ],
  "base": {
    "kind": "mm-mfe",
    "n_devices": 30,
    "alpha": 1.0,
    "primary": {"lambda_P": 2.0, "V": 10.0, "eta": 0.5, "P_max": 2.0, "f_max": 0.5, "mu3": 15.0},
    "types": [{"weight": 1.0, "lambda": 1.0, "V": 10.0, "eta": 0.5, "P_max": 0.0, "f_max": 0.7}],
    "solver": {"gamma1": 0.1, "multi_start": 1, "init_primary": [0.5, 0.6, 0.3], "init_secondary": [0.5, 0.0, 0.2]}
  }
})json"},
    {"utilization", R"json({
  "kind": "mm-mfe",
  "description": "Shared-transmitter utilization: the priority device first solves its solo problem, then the major-minor equilibrium with a secondary population; the busy-time gain is the case for admitting secondaries.",
  "seed": 8,
  "out": "utilization.csv",
  "n_devices": 30,
  "alpha": 1.0,
  "phases": ["solo", "shared"],
  "primary": {"lambda_P": 4.0, "V": 10.0, "eta": 0.5, "P_max": 2.0, "f_max": 0.5, "mu3": 15.0},
  "types": [{"weight": 1.0, "lambda": 10.0, "V": 10.0, "eta": 0.5, "P_max": 0.0, "f_max": 0.35}],
  "solver": {"gamma1": 0.1, "rho0": 0.5, "multi_start": 1, "init_primary": [0.5, 0.6, 0.3]}
})json"},
    {"validate", R"json({
  "kind": "validate",
  "description": "Analytic average age vs the event-driven simulator on fifteen checkpoints (five per topology); reports z-scores against batch-means standard errors.",
  "seed": 9,
  "out": "validate.csv",
  "target_deliveries": 1000000.0
})json"},
};

}  // namespace

std::uint64_t ExperimentConfig::hash() const {
  json canonical = doc;
  canonical.erase("out");
  canonical.erase("jobs");
  canonical.erase("description");
  return fnv1a64(canonical.dump());
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) bad("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.kind = str_at(doc, "kind");
  static const char* kKinds[] = {"aoi",  "simulate", "mfe",     "nash",
                                 "mm-mfe", "sweep",  "validate"};
  bool known = false;
  for (const char* k : kKinds) known = known || cfg.kind == k;
  if (!known)
    bad("config field 'kind' must be one of aoi, simulate, mfe, nash, "
        "mm-mfe, sweep, validate");
  cfg.seed = seed_or(doc, "seed", 0);
  cfg.jobs = int_or(doc, "jobs", 1);
  if (cfg.jobs < 0) bad("config field 'jobs' must be >= 0");
  if (doc.contains("out")) cfg.out = str_at(doc, "out");
  cfg.doc = doc;
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) bad("cannot open config file: " + path);
  return parse_config(json::parse(is));
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.push_back(p.name);
  return names;
}

nlohmann::json preset_config(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) {
      json doc = json::parse(p.text);
      doc["preset"] = name;
      return doc;
    }
  bad("unknown preset: " + name);
}

std::vector<ValidationPoint> validation_points() {
  std::vector<ValidationPoint> out;

  const EquitableRates equitable[] = {
      {10.0, 0.5, 1.0, 0.8, 15.0, 5.0}, {1.0, 0.3, 2.0, 1.0, 8.0, 2.0},
      {4.0, 0.7, 1.5, 2.0, 10.0, 1.0},  {2.0, 0.5, 0.7, 1.2, 6.0, 0.5},
      {8.0, 0.2, 3.0, 2.5, 20.0, 8.0},
  };
  for (std::size_t i = 0; i < std::size(equitable); ++i) {
    ValidationPoint pt;
    pt.name = "equitable-" + std::to_string(i + 1);
    pt.focal = "equitable[0]";
    pt.spec.topology = Topology::kEquitableFaithful;
    pt.spec.equitable = {equitable[i]};
    pt.spec.horizon = 1e4;  // placeholder; runners rescale
    pt.analytic = average_aoi(build_equitable_model(equitable[i]));
    out.push_back(std::move(pt));
  }

  const PrimaryRates primary[] = {
      {4.0, 0.5, 2.0, 0.5, 15.0},  {2.0, 0.3, 1.0, 0.8, 10.0},
      {10.0, 0.6, 3.0, 2.0, 8.0},  {1.0, 0.5, 0.5, 0.7, 5.0},
      {6.0, 0.8, 2.5, 1.5, 12.0},
  };
  for (std::size_t i = 0; i < std::size(primary); ++i) {
    ValidationPoint pt;
    pt.name = "primary-" + std::to_string(i + 1);
    pt.focal = "primary";
    pt.spec.topology = Topology::kPriorityFaithful;
    pt.spec.primary = primary[i];
    pt.spec.horizon = 1e4;
    pt.analytic = primary_aoi(primary[i]);
    out.push_back(std::move(pt));
  }

  // SecondaryRates field order: lambda, p, mu2, mu1, mu3, lambda_e,
  // lambda_P_bar.  The co-simulated priority device is constructed to match
  // the secondary's view: same shared transmitter and edge rates, and an
  // offload stream equal to lambda_P_bar (p_P = 0).
  const SecondaryRates secondary[] = {
      {1.0, 0.5, 0.7, 2.0, 15.0, 1.0, 0.6},
      {4.0, 0.3, 0.5, 2.0, 15.0, 3.0, 1.2},
      {2.0, 0.6, 1.0, 1.5, 10.0, 0.8, 0.5},
      {3.0, 0.4, 0.9, 2.5, 12.0, 2.0, 1.0},
      {5.0, 0.5, 1.2, 3.0, 20.0, 1.0, 2.0},
  };
  for (std::size_t i = 0; i < std::size(secondary); ++i) {
    const SecondaryRates& sr = secondary[i];
    ValidationPoint pt;
    pt.name = "secondary-" + std::to_string(i + 1);
    pt.focal = "secondary[0]";
    pt.spec.topology = Topology::kPriorityFaithful;
    pt.spec.primary = PrimaryRates{sr.lambda_P_bar, 0.0, sr.mu1, 1.0, sr.mu3};
    pt.spec.secondary = {sr};
    pt.spec.horizon = 1e4;
    pt.analytic = average_aoi(build_secondary_model(sr));
    out.push_back(std::move(pt));
  }

  for (auto& pt : out) pt.spec.validate();
  return out;
}

double horizon_for_deliveries(const NetworkSpec& spec,
                              const std::string& focal, double target) {
  NetworkSpec pilot = spec;
  pilot.horizon = 5000.0;
  pilot.seed = derive_seed(spec.seed, 0xA110);
  const SimEstimate est = simulate(pilot);
  for (const auto& d : est.devices) {
    if (d.device != focal) continue;
    const double rate = static_cast<double>(d.deliveries) / pilot.horizon;
    return std::max(pilot.horizon, target / rate * 1.15);
  }
  throw std::invalid_argument("focal device not present in network: " + focal);
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind == "aoi") return run_aoi(cfg);
  if (cfg.kind == "simulate") return run_simulate(cfg);
  if (cfg.kind == "mfe") return run_mfe(cfg);
  if (cfg.kind == "nash") return run_nash(cfg);
  if (cfg.kind == "mm-mfe") return run_mm(cfg);
  if (cfg.kind == "validate") return run_validate(cfg);
  if (cfg.kind == "sweep") return run_sweep(cfg);
  bad("unknown experiment kind: " + cfg.kind);
}

}  // namespace mec
