#include "mec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mec/parallel.hpp"
#include "mec/rng.hpp"

// Fixed-point layer.  All three solvers share the same skeleton: improve
// policies against the current aggregate, measure the aggregate the improved
// policies would generate, and damp towards it.  Multi-start (where used) is
// embarrassingly parallel; each start owns a derived RNG stream and its own
// result slot, so parallel and serial runs are bit-identical.

namespace mec {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DevicePolicy midpoint(const PolicyBounds& b) {
  return {0.5 * (b.lo.p + b.hi.p), 0.5 * (b.lo.mu1 + b.hi.mu1),
          0.5 * (b.lo.mu2 + b.hi.mu2)};
}

DevicePolicy random_policy(SplitMix64& gen, const PolicyBounds& b) {
  const auto draw = [&gen](double lo, double hi) {
    return lo + (hi - lo) * gen.uniform01();
  };
  return {draw(b.lo.p, b.hi.p), draw(b.lo.mu1, b.hi.mu1),
          draw(b.lo.mu2, b.hi.mu2)};
}

// Policy box of one type; secondaries pin mu1 to 0 (no own transmitter).
PolicyBounds type_box(const TypeProfile& tp, bool pin_mu1) {
  PolicyBounds b;
  b.lo = {0.0, 0.0, 0.0};
  b.hi = {1.0, pin_mu1 ? 0.0 : tp.P_max, tp.f_max};
  return b;
}

double weight_sum(const std::vector<TypeProfile>& profiles) {
  double w = 0.0;
  for (const auto& tp : profiles) w += tp.weight;
  if (!(w > 0.0))
    throw std::invalid_argument("TypeProfile.weight must sum to > 0");
  return w;
}

// Mean edge load one device induces under the shared-edge system: its
// transmitter departure rate over the edge rate, averaged over types.
double equitable_load(const std::vector<TypeProfile>& profiles,
                      const std::vector<DevicePolicy>& xs, double mu3,
                      double wsum) {
  double acc = 0.0;
  for (std::size_t t = 0; t < profiles.size(); ++t) {
    const double offered = profiles[t].lambda * (1.0 - xs[t].p);
    const double mu1 = xs[t].mu1;
    if (offered + mu1 > 0.0)
      acc += profiles[t].weight * offered * mu1 / (offered + mu1);
  }
  return acc / wsum / mu3;
}

// Mean secondary offload demand per unit of shared-transmitter rate.
double secondary_demand(const std::vector<TypeProfile>& profiles,
                        const std::vector<DevicePolicy>& xs, double mu1P,
                        double wsum) {
  if (mu1P < 1e-12) return 0.0;  // transmitter off: nobody can offload
  double acc = 0.0;
  for (std::size_t t = 0; t < profiles.size(); ++t)
    acc += profiles[t].weight * profiles[t].lambda * (1.0 - xs[t].p);
  return std::min(acc / wsum / mu1P, 1e6);
}

struct StartSlot {
  EquilibriumResult res;
  bool ok = false;
  std::string err;
};

// Converged start with the lowest score wins (ties: lowest start index,
// so multi-start results are order-independent).  If nothing converged,
// fall back to the closest-to-consistent attempt and keep the flag false.
template <typename Score>
EquilibriumResult pick_winner(std::vector<StartSlot>& slots, Score score) {
  int best = -1;
  double best_score = kInf;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (!slots[j].ok || !slots[j].res.converged) continue;
    const double s = score(slots[j].res);
    if (best < 0 || s < best_score) {
      best = static_cast<int>(j);
      best_score = s;
    }
  }
  if (best >= 0) return std::move(slots[best].res);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (!slots[j].ok) continue;
    const double s = slots[j].res.residual;
    if (best < 0 || s < best_score) {
      best = static_cast<int>(j);
      best_score = s;
    }
  }
  if (best >= 0) return std::move(slots[best].res);
  std::string what = "every equilibrium start failed";
  for (const auto& slot : slots)
    if (!slot.err.empty()) {
      what += ": " + slot.err;
      break;
    }
  throw std::runtime_error(what);
}

EquilibriumResult mfe_one_start(const std::vector<TypeProfile>& profiles,
                                int n_devices, double mu3,
                                const SolverConfig& cfg,
                                const std::vector<PolicyBounds>& boxes,
                                double wsum, int j) {
  SplitMix64 gen(derive_seed(cfg.seed, static_cast<std::uint64_t>(j)));
  std::vector<DevicePolicy> xs(profiles.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (j == 0)
      xs[t] = project_box(cfg.init_secondary.value_or(midpoint(boxes[t])),
                          boxes[t]);
    else
      xs[t] = random_policy(gen, boxes[t]);
  }

  EquilibriumResult res;
  double rho = cfg.rho0;
  res.rho_trace.push_back(rho);
  for (int k = 1; k <= cfg.max_outer; ++k) {
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const auto objective = [&](const DevicePolicy& y) {
        return cost_mf_equitable(y, profiles[t], rho, n_devices, mu3);
      };
      xs[t] = coordinate_sweep(objective, xs[t], boxes[t], cfg);
    }
    const double consistent = equitable_load(profiles, xs, mu3, wsum);
    res.residual = std::abs(consistent - rho);
    res.iterations = k;
    if (res.residual <= cfg.eps1) {
      res.converged = true;  // returned rho is the pre-update value
      break;
    }
    rho = (1.0 - cfg.gamma1) * rho + cfg.gamma1 * consistent;
    res.rho_trace.push_back(rho);
  }
  res.rho = rho;
  res.type_policies = xs;
  for (std::size_t t = 0; t < xs.size(); ++t)
    res.type_costs.push_back(
        cost_mf_equitable_parts(xs[t], profiles[t], rho, n_devices, mu3));
  return res;
}

EquilibriumResult mm_one_start(const PrimaryParams& primary,
                               const std::vector<TypeProfile>& profiles,
                               int n_devices, double alpha,
                               const SolverConfig& cfg,
                               const PolicyBounds& pbox,
                               const std::vector<PolicyBounds>& boxes,
                               double wsum, int j) {
  SplitMix64 gen(derive_seed(cfg.seed, static_cast<std::uint64_t>(j)));
  DevicePolicy xp;
  std::vector<DevicePolicy> xs(profiles.size());
  if (j == 0) {
    xp = project_box(cfg.init_primary.value_or(midpoint(pbox)), pbox);
    for (std::size_t t = 0; t < xs.size(); ++t)
      xs[t] = project_box(cfg.init_secondary.value_or(midpoint(boxes[t])),
                          boxes[t]);
  } else {
    xp = random_policy(gen, pbox);
    for (std::size_t t = 0; t < xs.size(); ++t)
      xs[t] = random_policy(gen, boxes[t]);
  }

  EquilibriumResult res;
  double rho = cfg.rho0;
  res.rho_trace.push_back(rho);
  for (int k = 1; k <= cfg.max_outer; ++k) {
    // The demand the priority device sells scales with its own transmit
    // rate, so lambda_s is re-derived inside the objective at every probe.
    const auto objective_p = [&](const DevicePolicy& y) {
      return cost_primary(y, primary, n_devices * y.mu1 * rho, alpha);
    };
    xp = coordinate_sweep(objective_p, xp, pbox, cfg);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const auto objective_s = [&](const DevicePolicy& y) {
        return cost_mf_secondary(y, profiles[t], xp, primary, rho, n_devices,
                                 alpha);
      };
      xs[t] = coordinate_sweep(objective_s, xs[t], boxes[t], cfg);
    }
    const double consistent = secondary_demand(profiles, xs, xp.mu1, wsum);
    res.residual = std::abs(consistent - rho);
    res.iterations = k;
    if (res.residual <= cfg.eps1) {
      res.converged = true;
      break;
    }
    rho = (1.0 - cfg.gamma1) * rho + cfg.gamma1 * consistent;
    res.rho_trace.push_back(rho);
  }
  res.rho = rho;
  res.primary_policy = xp;
  res.primary_cost =
      cost_primary_parts(xp, primary, n_devices * xp.mu1 * rho, alpha);
  res.type_policies = xs;
  for (std::size_t t = 0; t < xs.size(); ++t)
    res.type_costs.push_back(cost_mf_secondary_parts(
        xs[t], profiles[t], xp, primary, rho, n_devices, alpha));
  return res;
}

// Run every start (possibly in parallel), trapping per-start failures in
// their slots so one bad basin cannot take down the whole solve.
template <typename OneStart>
std::vector<StartSlot> run_starts(const SolverConfig& cfg, OneStart one) {
  std::vector<StartSlot> slots(cfg.multi_start);
  run_points(
      cfg.multi_start,
      [&](int j) {
        try {
          slots[j].res = one(j);
          slots[j].ok = true;
        } catch (const std::exception& e) {
          slots[j].err = e.what();
        }
      },
      cfg.jobs);
  return slots;
}

}  // namespace

EquilibriumResult mfe_solve(const std::vector<TypeProfile>& profiles,
                            int n_devices, double mu3,
                            const SolverConfig& cfg) {
  cfg.validate();
  if (profiles.empty())
    throw std::invalid_argument("mfe_solve: profiles must be non-empty");
  if (n_devices < 1)
    throw std::invalid_argument("mfe_solve: n_devices must be >= 1");
  if (!(std::isfinite(mu3) && mu3 > 0.0))
    throw std::invalid_argument("mfe_solve: mu3 must be finite and > 0");
  for (const auto& tp : profiles) tp.validate();
  const double wsum = weight_sum(profiles);

  std::vector<PolicyBounds> boxes;
  boxes.reserve(profiles.size());
  for (const auto& tp : profiles) boxes.push_back(type_box(tp, false));

  auto slots = run_starts(cfg, [&](int j) {
    return mfe_one_start(profiles, n_devices, mu3, cfg, boxes, wsum, j);
  });
  return pick_winner(slots, [&](const EquilibriumResult& r) {
    double c = 0.0;
    for (std::size_t t = 0; t < profiles.size(); ++t)
      c += profiles[t].weight * r.type_costs[t].total;
    return c / wsum;
  });
}

NashResult nash_solve(const std::vector<TypeProfile>& devices, double mu3,
                      const SolverConfig& cfg) {
  cfg.validate();
  if (devices.empty())
    throw std::invalid_argument("nash_solve: devices must be non-empty");
  if (!(std::isfinite(mu3) && mu3 > 0.0))
    throw std::invalid_argument("nash_solve: mu3 must be finite and > 0");
  for (const auto& tp : devices) tp.validate();

  const int n = static_cast<int>(devices.size());
  std::vector<PolicyBounds> boxes;
  boxes.reserve(devices.size());
  for (const auto& tp : devices) boxes.push_back(type_box(tp, false));

  NashResult out;
  out.policies.resize(devices.size());
  for (int i = 0; i < n; ++i)
    out.policies[i] = cfg.init_secondary
                          ? project_box(*cfg.init_secondary, boxes[i])
                          : midpoint(boxes[i]);

  const auto interference = [&](int i) {
    std::vector<OtherDevice> others;
    others.reserve(devices.size() - 1);
    for (int k = 0; k < n; ++k)
      if (k != i)
        others.push_back(
            {devices[k].lambda, out.policies[k].p, out.policies[k].mu1});
    return exogenous_rate(others);
  };

  for (int cycle = 1; cycle <= cfg.max_outer; ++cycle) {
    double moved = 0.0;
    for (int i = 0; i < n; ++i) {
      const double lambda_e = interference(i);
      const auto objective = [&](const DevicePolicy& y) {
        return cost_equitable(y, devices[i], lambda_e, mu3);
      };
      const DevicePolicy prev = out.policies[i];
      out.policies[i] =
          block_descent(objective, prev, boxes[i], cfg).x;
      moved = std::max({moved, std::abs(out.policies[i].p - prev.p),
                        std::abs(out.policies[i].mu1 - prev.mu1),
                        std::abs(out.policies[i].mu2 - prev.mu2)});
    }
    out.cycles = cycle;
    out.max_change = moved;
    if (moved <= cfg.eps1) {
      out.converged = true;
      break;
    }
  }
  for (int i = 0; i < n; ++i)
    out.costs.push_back(
        cost_equitable_parts(out.policies[i], devices[i], interference(i),
                             mu3));
  return out;
}

EquilibriumResult mm_mfe_solve(const PrimaryParams& primary,
                               const std::vector<TypeProfile>& profiles,
                               int n_devices, double alpha,
                               const SolverConfig& cfg) {
  cfg.validate();
  primary.validate();
  if (profiles.empty())
    throw std::invalid_argument("mm_mfe_solve: profiles must be non-empty");
  if (n_devices < 1)
    throw std::invalid_argument("mm_mfe_solve: n_devices must be >= 1");
  if (!(std::isfinite(alpha) && alpha >= 0.0))
    throw std::invalid_argument("mm_mfe_solve: alpha must be finite and >= 0");
  for (const auto& tp : profiles) tp.validate();
  const double wsum = weight_sum(profiles);

  PolicyBounds pbox;
  pbox.lo = {0.0, 0.0, 0.0};
  pbox.hi = {1.0, primary.P_max, primary.f_max};
  std::vector<PolicyBounds> boxes;
  boxes.reserve(profiles.size());
  for (const auto& tp : profiles) boxes.push_back(type_box(tp, true));

  auto slots = run_starts(cfg, [&](int j) {
    return mm_one_start(primary, profiles, n_devices, alpha, cfg, pbox, boxes,
                        wsum, j);
  });
  // Society cost: the priority device plus the average secondary.
  return pick_winner(slots, [&](const EquilibriumResult& r) {
    double c = r.primary_cost.total;
    for (std::size_t t = 0; t < profiles.size(); ++t)
      c += profiles[t].weight * r.type_costs[t].total / wsum;
    return c;
  });
}

}  // namespace mec
