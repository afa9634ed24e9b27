// Tests for the projected coordinate descent and the equilibrium solvers.
// Optimizers are checked against problems with known answers (separable
// quadratics, monotone power-only costs) and against brute-force grid
// search on the real cost surface; the fixed points are certified by their
// own residuals and by perturbation (no coordinate move improves the cost).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mec/costs.hpp"
#include "mec/descent.hpp"
#include "mec/solvers.hpp"

using namespace mec;

namespace {

TypeProfile light_type() {
  TypeProfile tp;
  tp.id = 0;
  tp.weight = 1.0;
  tp.lambda = 1;
  tp.V = 10;
  tp.eta = .5;
  tp.P_max = 1;
  tp.f_max = 0.8;
  return tp;
}

PolicyBounds box_for(const TypeProfile& tp) {
  PolicyBounds b;
  b.lo = {0, 0, 0};
  b.hi = {1, tp.P_max, tp.f_max};
  return b;
}

SolverConfig quick_config() {
  SolverConfig cfg;
  cfg.multi_start = 2;
  cfg.seed = 1;
  return cfg;
}

void check_in_box(const DevicePolicy& x, const PolicyBounds& b) {
  CHECK(x.p >= b.lo.p);
  CHECK(x.p <= b.hi.p);
  CHECK(x.mu1 >= b.lo.mu1);
  CHECK(x.mu1 <= b.hi.mu1);
  CHECK(x.mu2 >= b.lo.mu2);
  CHECK(x.mu2 <= b.hi.mu2);
}

}  // namespace

// ------------------------------------------------------------- primitives

TEST_CASE("box projection clamps coordinatewise") {
  CHECK(project_box(0.5, 0, 1) == 0.5);
  CHECK(project_box(-2, 0, 1) == 0.0);
  CHECK(project_box(7, 0, 1) == 1.0);
  PolicyBounds b;
  b.lo = {0, 1, 2};
  b.hi = {1, 3, 4};
  const DevicePolicy x = project_box({-1, 5, 3}, b);
  CHECK(x.p == 0.0);
  CHECK(x.mu1 == 3.0);
  CHECK(x.mu2 == 3.0);
}

TEST_CASE("central difference nails smooth derivatives") {
  const auto square = [](double x) { return x * x; };
  CHECK(fd_gradient(square, 3.0, 1e-6) == doctest::Approx(6.0).epsilon(1e-6));
  const auto cube = [](double x) { return x * x * x; };
  CHECK(fd_gradient(cube, 2.0, 1e-6) == doctest::Approx(12.0).epsilon(1e-6));
}

TEST_CASE("coordinate gradient respects pins and bounds") {
  PolicyBounds b;
  b.lo = {0, 1, 0};
  b.hi = {1, 1, 2};  // mu1 pinned
  const auto f = [](const DevicePolicy& x) {
    return x.p * x.p + 3 * x.mu1 + x.mu2 * x.mu2 * x.mu2;
  };
  CHECK(fd_gradient(f, {.5, 1, 1}, 1, b, 1e-6) == 0.0);  // pinned -> 0
  CHECK(fd_gradient(f, {.5, 1, 1}, 0, b, 1e-6) ==
        doctest::Approx(1.0).epsilon(1e-6));
  // At an active bound the probe degrades to a one-sided difference.
  CHECK(fd_gradient(f, {1.0, 1, 1}, 0, b, 1e-4) ==
        doctest::Approx(2.0).epsilon(1e-2));
  CHECK(fd_gradient(f, {.5, 1, 0.0}, 2, b, 1e-4) ==
        doctest::Approx(0.0).epsilon(1e-2));
}

TEST_CASE("finite difference tracks a high-order stencil on the real cost") {
  const TypeProfile tp = light_type();
  const auto f = [&](double mu2) {
    return cost_equitable({.5, .5, mu2}, tp, 2, 15);
  };
  const double x = 0.4, h = 1e-4;
  const double central = (f(x + h) - f(x - h)) / (2 * h);
  const double five = (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
  CHECK(central == doctest::Approx(five).epsilon(1e-4));
}

// ---------------------------------------------------------------- descent

TEST_CASE("descent finds the box argmin of a separable quadratic") {
  const auto f = [](const DevicePolicy& x) {
    return (x.p - .3) * (x.p - .3) + (x.mu1 - 2) * (x.mu1 - 2) +
           (x.mu2 - 5) * (x.mu2 - 5);
  };
  PolicyBounds b;
  b.lo = {0, 0, 0};
  b.hi = {1, 1.5, 3};  // mu1 and mu2 minima lie outside the box
  const DescentResult res = block_descent(f, {.5, .75, 1.5}, b, quick_config());
  CHECK(res.converged);
  CHECK(res.x.p == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(res.x.mu1 == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(res.x.mu2 == doctest::Approx(3.0).epsilon(1e-6));
  check_in_box(res.x, b);
}

TEST_CASE("a flat objective never moves the incumbent") {
  const auto f = [](const DevicePolicy&) { return 1.0; };
  const PolicyBounds b = box_for(light_type());
  const DevicePolicy from{.25, .5, .125};
  const DevicePolicy to = coordinate_sweep(f, from, b, quick_config());
  CHECK(to.p == from.p);
  CHECK(to.mu1 == from.mu1);
  CHECK(to.mu2 == from.mu2);
}

TEST_CASE("objectives that throw act as walls, not crashes") {
  // +inf outside mu2 <= .5: the descent must stay in the feasible part.
  const auto f = [](const DevicePolicy& x) {
    if (x.mu2 > 0.5) throw std::runtime_error("wall");
    return (x.mu2 - 3) * (x.mu2 - 3);
  };
  PolicyBounds b;
  b.lo = {0, 0, 0};
  b.hi = {0, 0, 2};  // only mu2 free
  const DescentResult res = block_descent(f, {0, 0, 0.25}, b, quick_config());
  CHECK(res.x.mu2 <= 0.5);
  CHECK(res.x.mu2 > 0.25);  // it still made progress toward the wall
  CHECK(std::isfinite(res.cost));
}

TEST_CASE("pure power costs drive both rates to zero") {
  TypeProfile tp = light_type();
  tp.V = 0;  // no age term: any positive rate is wasted power
  const auto f = [&](const DevicePolicy& x) {
    return cost_mf_equitable(x, tp, .5, 30, 15);
  };
  const PolicyBounds b = box_for(tp);
  const DescentResult res = block_descent(f, {.5, .5, .4}, b, quick_config());
  CHECK(res.converged);
  // The optimum value is exactly zero (either rate at 0, or its stream
  // routed away); the descent stalls within its movement tolerance of it.
  CHECK(res.cost <= 1e-5);
  CHECK(busy_transmit(tp.lambda, res.x.p, res.x.mu1) * res.x.mu1 <= 1e-5);
  CHECK(res.x.mu2 <= 0.02);
}

// ------------------------------------------------------- mean-field solver

TEST_CASE("mean-field equilibrium: certified fixed point on the real cost") {
  const std::vector<TypeProfile> types = {light_type()};
  SolverConfig cfg = quick_config();
  const EquilibriumResult res = mfe_solve(types, 2, 15, cfg);
  REQUIRE(res.converged);
  CHECK(res.residual <= cfg.eps1);
  REQUIRE(res.type_policies.size() == 1);
  check_in_box(res.type_policies[0], box_for(types[0]));
  CHECK(res.rho_trace.front() == cfg.rho0);
  CHECK(res.rho_trace.back() == res.rho);
  CHECK(res.iterations > 0);

  // No single-coordinate nudge may beat the equilibrium policy against the
  // equilibrium load (descent stationarity at the fixed point).
  const DevicePolicy& x = res.type_policies[0];
  const double at = cost_mf_equitable(x, types[0], res.rho, 2, 15);
  const PolicyBounds b = box_for(types[0]);
  const double delta = 10 * cfg.eps2;
  for (int coord = 0; coord < 3; ++coord) {
    for (double sign : {-1.0, 1.0}) {
      DevicePolicy probe = x;
      double* v = coord == 0 ? &probe.p : coord == 1 ? &probe.mu1 : &probe.mu2;
      *v += sign * delta;
      probe = project_box(probe, b);
      const double moved = cost_mf_equitable(probe, types[0], res.rho, 2, 15);
      CHECK(moved >= at - 1e-6);
    }
  }
}

TEST_CASE("mean-field solver is deterministic, also across worker counts") {
  const std::vector<TypeProfile> types = {light_type()};
  SolverConfig cfg = quick_config();
  cfg.multi_start = 4;
  const EquilibriumResult a = mfe_solve(types, 2, 15, cfg);
  const EquilibriumResult b = mfe_solve(types, 2, 15, cfg);
  CHECK(a.rho == b.rho);
  CHECK(a.type_policies[0].p == b.type_policies[0].p);
  CHECK(a.type_policies[0].mu1 == b.type_policies[0].mu1);
  CHECK(a.type_policies[0].mu2 == b.type_policies[0].mu2);

  SolverConfig par = cfg;
  par.jobs = 4;  // parallel multi-start must pick the identical winner
  const EquilibriumResult c = mfe_solve(types, 2, 15, par);
  CHECK(a.rho == c.rho);
  CHECK(a.type_policies[0].mu2 == c.type_policies[0].mu2);
}

TEST_CASE("a population that generates no traffic loads nothing") {
  TypeProfile tp = light_type();
  tp.lambda = 0;
  tp.V = 0;
  SolverConfig cfg = quick_config();
  const EquilibriumResult res = mfe_solve({tp}, 30, 15, cfg);
  CHECK(res.converged);
  CHECK(res.rho <= 2 * cfg.eps1);  // geometric decay stops at the tolerance
  CHECK(res.residual <= cfg.eps1);
}

TEST_CASE("two-type populations keep per-type policies and costs apart") {
  TypeProfile a = light_type();
  a.weight = .5;
  TypeProfile b = light_type();
  b.id = 1;
  b.weight = .5;
  b.lambda = 4;  // heavier traffic, same bounds
  SolverConfig cfg = quick_config();
  cfg.multi_start = 1;
  const EquilibriumResult res = mfe_solve({a, b}, 10, 15, cfg);
  REQUIRE(res.type_policies.size() == 2);
  REQUIRE(res.type_costs.size() == 2);
  CHECK(res.converged);
  // Arrivals are free updates: the sparse-traffic type lives with staler
  // information and pays more for it at its own optimum.
  CHECK(res.type_costs[0].total > res.type_costs[1].total);
  CHECK(res.type_policies[0].p != res.type_policies[1].p);
}

// ------------------------------------------------------------ Nash solver

TEST_CASE("single-player best response equals brute-force minimization") {
  const TypeProfile tp = light_type();
  SolverConfig cfg = quick_config();
  const NashResult res = nash_solve({tp}, 15, cfg);
  REQUIRE(res.converged);
  REQUIRE(res.policies.size() == 1);

  // Coarse grid, then a 10x refinement around the best cell.  The grid
  // needs the same +infinity guard the descent uses: the age solve rejects
  // a zero-rate transmitter outright.
  const auto objective = [&](const DevicePolicy& x) {
    try {
      return cost_equitable(x, tp, 0, 15);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  DevicePolicy best{0, 0, 0};
  double best_cost = objective(best);
  const auto scan = [&](double p_lo, double p_hi, double m1_lo, double m1_hi,
                        double m2_lo, double m2_hi, double step_frac) {
    const int n = static_cast<int>(std::round(1.0 / step_frac));
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        for (int k = 0; k <= n; ++k) {
          const DevicePolicy x{p_lo + (p_hi - p_lo) * i / n,
                               m1_lo + (m1_hi - m1_lo) * j / n,
                               m2_lo + (m2_hi - m2_lo) * k / n};
          const double c = objective(x);
          if (c < best_cost) {
            best_cost = c;
            best = x;
          }
        }
  };
  scan(0, 1, 0, tp.P_max, 0, tp.f_max, 0.05);
  scan(std::max(0.0, best.p - .05), std::min(1.0, best.p + .05),
       std::max(0.0, best.mu1 - .05), std::min(tp.P_max, best.mu1 + .05),
       std::max(0.0, best.mu2 - .04), std::min(tp.f_max, best.mu2 + .04),
       0.05);
  const double solver_cost = res.costs[0].total;
  CHECK(solver_cost <= best_cost * (1 + 1e-3));  // descent >= grid accuracy
  CHECK(res.policies[0].p == doctest::Approx(best.p).epsilon(0.02));
}

TEST_CASE("identical players reach a symmetric equilibrium") {
  const TypeProfile tp = light_type();
  SolverConfig cfg = quick_config();
  const NashResult res = nash_solve({tp, tp}, 15, cfg);
  REQUIRE(res.converged);
  REQUIRE(res.policies.size() == 2);
  CHECK(res.policies[0].p == doctest::Approx(res.policies[1].p).epsilon(1e-3));
  CHECK(res.policies[0].mu1 ==
        doctest::Approx(res.policies[1].mu1).epsilon(1e-3));
  CHECK(res.policies[0].mu2 ==
        doctest::Approx(res.policies[1].mu2).epsilon(1e-3));
  CHECK(res.max_change <= cfg.eps1);
  for (const DevicePolicy& x : res.policies) check_in_box(x, box_for(tp));

  // Equilibrium certificate: no player can improve by a unilateral descent.
  for (int i = 0; i < 2; ++i) {
    const double lam_e =
        exogenous_rate({{tp.lambda, res.policies[1 - i].p, res.policies[1 - i].mu1}});
    const auto f = [&](const DevicePolicy& x) {
      return cost_equitable(x, tp, lam_e, 15);
    };
    const DescentResult br = block_descent(f, res.policies[i], box_for(tp), cfg);
    CHECK(br.cost >= res.costs[i].total - 1e-6);
  }
}

// ----------------------------------------------------- major-minor solver

TEST_CASE("major-minor equilibrium: fixed point with per-side optimality") {
  PrimaryParams pp;
  pp.lambda_P = 4;
  pp.V = 10;
  pp.eta = .5;
  pp.P_max = 10;
  pp.f_max = 3;
  pp.mu3 = 15;
  TypeProfile tp = light_type();
  tp.lambda = 5;
  tp.P_max = 0;  // secondaries own no transmitter
  tp.f_max = 1.5;
  SolverConfig cfg = quick_config();
  cfg.gamma1 = .1;
  cfg.multi_start = 1;
  cfg.init_primary = DevicePolicy{.5, .6, .3};
  cfg.init_secondary = DevicePolicy{.5, 0, .6};
  const EquilibriumResult res = mm_mfe_solve(pp, {tp}, 30, 1.0, cfg);
  REQUIRE(res.converged);
  CHECK(res.residual <= cfg.eps1);
  CHECK(res.rho >= 0.0);
  PolicyBounds pb;
  pb.lo = {0, 0, 0};
  pb.hi = {1, pp.P_max, pp.f_max};
  check_in_box(res.primary_policy, pb);
  PolicyBounds sb;
  sb.lo = {0, 0, 0};
  sb.hi = {1, 0, tp.f_max};  // mu1 pinned to the shared transmitter
  check_in_box(res.type_policies[0], sb);
  CHECK(res.type_policies[0].mu1 == 0.0);
  // The sale nets the primary device income and costs the secondaries.
  CHECK(res.primary_cost.revenue <= 0.0);
  CHECK(res.type_costs[0].revenue >= 0.0);
}

TEST_CASE("no secondary traffic reduces the primary to its solo problem") {
  PrimaryParams pp;
  pp.lambda_P = 4;
  pp.V = 10;
  pp.eta = .5;
  pp.P_max = 10;
  pp.f_max = 3;
  pp.mu3 = 15;
  TypeProfile tp;
  tp.lambda = 0;  // the population never generates tasks
  tp.V = 0;
  tp.eta = .5;
  tp.P_max = 0;
  tp.f_max = 1;
  SolverConfig cfg = quick_config();
  cfg.multi_start = 1;
  cfg.init_primary = DevicePolicy{.5, 5, 1.5};
  const EquilibriumResult res = mm_mfe_solve(pp, {tp}, 30, 1.0, cfg);
  REQUIRE(res.converged);
  CHECK(res.rho <= 2 * cfg.eps1);

  PolicyBounds pb;
  pb.lo = {0, 0, 0};
  pb.hi = {1, pp.P_max, pp.f_max};
  const auto solo = [&](const DevicePolicy& y) {
    return cost_primary(y, pp, 0, 1.0);
  };
  // The fixed-point loop runs one sweep per outer iteration and stops on
  // the load residual, so the policy is near -- not at -- the solo optimum.
  // Warm-starting a full descent from it must close the remaining gap.
  const DescentResult ref = block_descent(solo, *cfg.init_primary, pb, cfg);
  const DescentResult polished = block_descent(solo, res.primary_policy, pb, cfg);
  CHECK(polished.cost == doctest::Approx(ref.cost).epsilon(1e-3));
  CHECK(res.primary_cost.total >= polished.cost - 1e-9);
  CHECK((res.primary_cost.total - polished.cost) / polished.cost <= 0.02);
}

// ------------------------------------------------------------- validation

TEST_CASE("solver knobs and bounds are validated by name") {
  SolverConfig cfg;
  cfg.gamma1 = 0;  // damping must stay in (0, 1]
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("gamma1"),
                       std::invalid_argument);
  SolverConfig cfg2;
  cfg2.eps1 = 0;
  CHECK_THROWS_WITH_AS(cfg2.validate(), doctest::Contains("eps1"),
                       std::invalid_argument);
  PolicyBounds b;
  b.lo = {.6, 0, 0};
  b.hi = {.4, 1, 1};
  CHECK_THROWS_WITH_AS(b.validate(), doctest::Contains("p"),
                       std::invalid_argument);
  CHECK_THROWS_AS(mfe_solve({}, 2, 15, SolverConfig{}), std::invalid_argument);
}
