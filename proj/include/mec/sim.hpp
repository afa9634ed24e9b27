#pragma once
// Discrete-event simulation of the offloading networks, used as the
// empirical check on the analytic age models and as the probe for how much
// the Poisson-interference approximation costs.
//
// Topologies:
//   equitable-faithful: every device runs in isolation against a synthetic
//     Poisson stream of other-device offloads at its own lambda_e.  This is
//     the exact process behind the analytic model, so estimates must agree
//     within Monte-Carlo error.
//   equitable-full: all devices share one edge server and interfere through
//     their actual transmitter departures (lambda_e fields must be zero; the
//     interference is derived, not injected).  The gap to the analytic value
//     measures the Poisson approximation.
//   priority-faithful: the priority device is simulated physically (its age
//     is interference-free by preemption); each secondary device is driven
//     as the jump process of its analytic model with the given lambda_e and
//     lambda_P_bar streams.  The secondary model's bookkeeping of stale
//     copies is not a physical queue discipline (see chain_simulate), so the
//     faithful estimate simulates the model itself.
//   priority-full: one shared transmitter with priority preemption and drops,
//     one shared edge server, per-device local processors.  Secondary
//     lambda_e / lambda_P_bar fields must be zero (derived from traffic).
//     Secondary estimates REPORT the physical-vs-model gap.
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mec/shs.hpp"

namespace mec {

enum class Topology {
  kEquitableFull,
  kEquitableFaithful,
  kPriorityFull,
  kPriorityFaithful,
};

// Round-trips with the CLI config files ("equitable-full", ...).
std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

struct NetworkSpec {
  Topology topology = Topology::kEquitableFaithful;
  // Equitable topologies: one entry per device.
  std::vector<EquitableRates> equitable;
  // Priority topologies: exactly one priority device, any number of
  // secondaries.
  std::optional<PrimaryRates> primary;
  std::vector<SecondaryRates> secondary;
  double horizon = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument naming the field
};

struct BusyFraction {
  std::string server;  // e.g. "equitable[2].L", "primary.T_P:priority"
  double simulated = 0.0;
  double analytic = 0.0;
};

struct DeviceEstimate {
  std::string device;
  double aoi = 0.0;        // time-average age over the measurement window
  double ci95 = 0.0;       // batch-means half-widths
  double ci3sigma = 0.0;
  std::uint64_t deliveries = 0;  // age-improving deliveries only
  std::vector<BusyFraction> busy;
};

struct SimEstimate {
  std::vector<DeviceEstimate> devices;
  std::uint64_t seed = 0;  // echo of the spec seed
};

// A device that never delivers a packet over the horizon has no age
// estimate; that is a configuration problem, not a number.
class DegenerateSimulation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs the network to the horizon.  Deterministic: identical (spec, seed)
// gives bit-identical estimates.  Per-device RNG substreams are derived
// from the master seed by fixed keys, so adding a device never perturbs
// the streams of existing ones.
//
// Estimates use exact sawtooth integration, a 5% warm-up truncation, and
// 50 equal batches for the confidence half-widths.  Deliveries that would
// not improve the monitor age (stale under preemption races) are ignored.
SimEstimate simulate(const NetworkSpec& spec);

// Convenience wrapper around simulate(): every device's busy fractions,
// flattened, with the matching closed-form values.
std::vector<BusyFraction> busy_fraction_check(const NetworkSpec& spec);

// Monte-Carlo run of an ShsModel's jump process itself: exponential clocks
// on every row (self-loops included), age vector grown by the state's mask
// and remapped by the chosen row's reset map.  This is the faithful
// estimator for models whose reset maps are not realizable as a physical
// queue discipline.  Starts in the first recurrent state with all ages zero.
// on_row, if given, is called with the index of every fired transition row
// (after the jump) so callers can track occupancy statistics.
DeviceEstimate chain_simulate(
    const ShsModel& m, double horizon, std::uint64_t seed,
    const std::function<void(int row, double t)>& on_row = nullptr);

}  // namespace mec
