// Tests for the discrete-event simulator.  The faithful topologies simulate
// exactly the processes behind the analytic models, so their estimates must
// land within Monte-Carlo error of the linear-system values; the full
// topologies replace injected Poisson interference with the devices' actual
// departures, and their gaps are reported, not asserted.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "mec/costs.hpp"
#include "mec/shs.hpp"
#include "mec/sim.hpp"

using namespace mec;

namespace {

NetworkSpec one_faithful_device(double horizon, std::uint64_t seed) {
  NetworkSpec spec;
  spec.topology = Topology::kEquitableFaithful;
  spec.equitable = {{10, .5, 1, .8, 15, 5}};
  spec.horizon = horizon;
  spec.seed = seed;
  return spec;
}

double zscore(const DeviceEstimate& est, double analytic) {
  return (est.aoi - analytic) / (est.ci3sigma / 3.0);
}

}  // namespace

TEST_CASE("estimates are bit-identical for identical spec and seed") {
  const NetworkSpec spec = one_faithful_device(2e4, 42);
  const SimEstimate a = simulate(spec);
  const SimEstimate b = simulate(spec);
  REQUIRE(a.devices.size() == b.devices.size());
  for (std::size_t i = 0; i < a.devices.size(); ++i) {
    CHECK(a.devices[i].aoi == b.devices[i].aoi);
    CHECK(a.devices[i].ci95 == b.devices[i].ci95);
    CHECK(a.devices[i].ci3sigma == b.devices[i].ci3sigma);
    CHECK(a.devices[i].deliveries == b.devices[i].deliveries);
  }
  CHECK(a.seed == spec.seed);

  // A different seed must actually change the estimate.
  NetworkSpec other = spec;
  other.seed = 43;
  CHECK(simulate(other).devices[0].aoi != a.devices[0].aoi);
}

TEST_CASE("adding a device never perturbs existing devices' streams") {
  NetworkSpec solo = one_faithful_device(1e4, 7);
  NetworkSpec duo = solo;
  duo.equitable.push_back({4, .7, 1.5, 2, 15, 1});
  const double alone = simulate(solo).devices[0].aoi;
  const double together = simulate(duo).devices[0].aoi;
  CHECK(alone == together);  // faithful devices are independent substreams
}

TEST_CASE("a horizon too short to deliver anything is an error") {
  NetworkSpec spec = one_faithful_device(1.0, 1);
  spec.equitable[0].lambda = 1e-3;  // mean first arrival is 1000 time units
  CHECK_THROWS_AS(simulate(spec), DegenerateSimulation);
}

TEST_CASE("busy fractions match the closed forms") {
  const NetworkSpec spec = one_faithful_device(5e4, 11);
  const auto checks = busy_fraction_check(spec);
  REQUIRE(!checks.empty());
  bool saw_local = false, saw_transmit = false;
  for (const BusyFraction& b : checks) {
    CAPTURE(b.server);
    CHECK(std::abs(b.simulated - b.analytic) <= 0.015);
    if (b.server == "equitable[0].L") {
      saw_local = true;
      CHECK(b.analytic == doctest::Approx(5.0 / 5.8).epsilon(1e-12));
    }
    if (b.server == "equitable[0].T") {
      saw_transmit = true;
      CHECK(b.analytic == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    }
  }
  CHECK(saw_local);
  CHECK(saw_transmit);
}

TEST_CASE("equitable-faithful estimate brackets the analytic age") {
  const NetworkSpec spec = one_faithful_device(2e5, 3);
  const SimEstimate est = simulate(spec);
  const double analytic = average_aoi(build_equitable_model(spec.equitable[0]));
  REQUIRE(est.devices.size() == 1);
  CHECK(est.devices[0].deliveries > 100000);
  CHECK(std::abs(zscore(est.devices[0], analytic)) <= 3.0);
}

TEST_CASE("priority-faithful estimates bracket both analytic ages") {
  NetworkSpec spec;
  spec.topology = Topology::kPriorityFaithful;
  spec.primary = PrimaryRates{4, .5, 2, .5, 15};
  spec.secondary = {{1, .5, .7, 2, 15, 1, .6}, {4, .3, .5, 2, 15, 3, 1.2}};
  spec.horizon = 2e5;
  spec.seed = 5;
  const SimEstimate est = simulate(spec);
  REQUIRE(est.devices.size() == 3);
  CHECK(est.devices[0].device == "primary");
  const double a_p = primary_aoi(*spec.primary);
  CHECK(std::abs(zscore(est.devices[0], a_p)) <= 3.0);
  for (int i = 0; i < 2; ++i) {
    const double a_s = average_aoi(build_secondary_model(spec.secondary[i]));
    CAPTURE(i);
    CHECK(std::abs(zscore(est.devices[i + 1], a_s)) <= 3.0);
  }
}

TEST_CASE("equitable-full stays within 5% of the Poisson approximation") {
  // 30 light devices sharing one edge server: the approximation replaces 29
  // actual departure processes with one Poisson stream of the same rate.
  NetworkSpec spec;
  spec.topology = Topology::kEquitableFull;
  spec.equitable.assign(30, {1, .5, 1, 1, 15, 0});
  spec.horizon = 2000;
  spec.seed = 9;
  const SimEstimate est = simulate(spec);
  REQUIRE(est.devices.size() == 30);

  EquitableRates approx = spec.equitable[0];
  approx.lambda_e = exogenous_rate(std::vector<OtherDevice>(29, {1, .5, 1}));
  const double analytic = average_aoi(build_equitable_model(approx));

  double pooled = 0.0;
  for (const DeviceEstimate& d : est.devices) pooled += d.aoi;
  pooled /= static_cast<double>(est.devices.size());
  CHECK(std::abs(pooled - analytic) / analytic <= 0.05);
}

TEST_CASE("full-topology interference gaps are reported") {
  // Two heavily offloading devices: the Poisson approximation is at its
  // worst.  The gap is documented output, not a correctness bound.
  NetworkSpec spec;
  spec.topology = Topology::kEquitableFull;
  spec.equitable.assign(2, {10, .5, 1, .8, 15, 0});
  spec.horizon = 1e5;
  spec.seed = 13;
  const SimEstimate est = simulate(spec);
  EquitableRates approx = spec.equitable[0];
  approx.lambda_e = exogenous_rate({{10, .5, 1}});
  const double analytic = average_aoi(build_equitable_model(approx));
  std::ostringstream os;
  os << "equitable-full N=2 gap: simulated " << est.devices[0].aoi
     << " vs analytic " << analytic << " ("
     << 100 * (est.devices[0].aoi - analytic) / analytic << "%)";
  MESSAGE(os.str());
  CHECK(est.devices[0].aoi > 0);
}

TEST_CASE("priority-full matches the primary model and reports secondary gaps") {
  NetworkSpec spec;
  spec.topology = Topology::kPriorityFull;
  spec.primary = PrimaryRates{4, .5, 2, .5, 15};
  spec.secondary = {{1, .5, .7, 2, 15, 0, 0}, {1, .5, .7, 2, 15, 0, 0}};
  spec.horizon = 2e5;
  spec.seed = 17;
  const SimEstimate est = simulate(spec);
  REQUIRE(est.devices.size() == 3);

  // Preemption makes the priority device's age process exactly the model.
  const double a_p = primary_aoi(*spec.primary);
  CHECK(std::abs(zscore(est.devices[0], a_p)) <= 3.0);

  // Physical secondaries vs the per-model analytic values (interference
  // plugged in from the other devices' actual offered rates).
  SecondaryRates approx = spec.secondary[0];
  approx.lambda_e = exogenous_rate({{1, .5, 2}});  // the other secondary
  approx.lambda_P_bar = 4 * .5;
  const double a_s = average_aoi(build_secondary_model(approx));
  std::ostringstream os;
  os << "priority-full secondary gap: simulated " << est.devices[1].aoi
     << " vs analytic " << a_s << " ("
     << 100 * (est.devices[1].aoi - a_s) / a_s << "%)";
  MESSAGE(os.str());
  CHECK(est.devices[1].aoi > 0);
}

TEST_CASE("chain simulation of the model process agrees with the solve") {
  const ShsModel m = build_secondary_model({1, .5, .7, 2, 15, 1, .6});
  const DeviceEstimate est = chain_simulate(m, 2e5, 23);
  const double analytic = average_aoi(m);
  CHECK(est.deliveries > 10000);
  CHECK(std::abs(zscore(est, analytic)) <= 3.0);
}

TEST_CASE("chain simulation reports fired rows through the callback") {
  const ShsModel m = build_equitable_model({10, .5, 1, .8, 15, 5});
  std::vector<int> fired(m.transitions.size(), 0);
  double last_t = 0.0;
  bool ordered = true;
  chain_simulate(m, 1e3, 29, [&](int row, double t) {
    fired.at(row) += 1;
    ordered = ordered && t >= last_t;
    last_t = t;
  });
  CHECK(ordered);
  int total = 0;
  for (int c : fired) total += c;
  // Total event rate is lambda+lambda_e+mu1+mu2+mu3 = 31.8 in every state
  // with a transmitter row, slightly less in idle states.
  CHECK(total > 20000);
}

TEST_CASE("network specs reject inconsistent configurations by name") {
  NetworkSpec spec = one_faithful_device(1e3, 1);
  spec.horizon = 0;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("horizon"),
                       std::invalid_argument);

  NetworkSpec full = one_faithful_device(1e3, 1);
  full.topology = Topology::kEquitableFull;
  CHECK_THROWS_WITH_AS(full.validate(), doctest::Contains("lambda_e"),
                       std::invalid_argument);  // interference must be derived

  NetworkSpec prio;
  prio.topology = Topology::kPriorityFull;
  prio.horizon = 1e3;
  CHECK_THROWS_AS(prio.validate(), std::invalid_argument);  // no primary

  NetworkSpec empty;
  empty.topology = Topology::kEquitableFaithful;
  empty.horizon = 1e3;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);  // no devices
}

TEST_CASE("topology names round-trip") {
  for (Topology t : {Topology::kEquitableFull, Topology::kEquitableFaithful,
                     Topology::kPriorityFull, Topology::kPriorityFaithful}) {
    CHECK(topology_from_string(to_string(t)) == t);
  }
  CHECK_THROWS_AS(topology_from_string("ring"), std::invalid_argument);
}
