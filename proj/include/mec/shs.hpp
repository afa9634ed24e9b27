#pragma once
// Age-of-information models for an edge-offloading device, expressed as
// piecewise-linear stochastic hybrid systems: a finite Markov chain over
// "which server holds which-freshness packet" plus an age vector that grows
// at unit rate and is remapped linearly on every transition.  The average
// age falls out of two dense linear systems (steady state + age/state
// correlations); everything downstream (costs, equilibria) is built on top
// of these solves.
#include <string>
#include <vector>

namespace mec {

// Reset-map column that zeroes an age slot (a fresh packet enters there).
inline constexpr int kZeroSlot = -1;

// One row of a transition table: on an exponential clock of the given rate,
// jump from->to and remap the age vector as x'[k] = x[reset[k]] (or 0 when
// reset[k] == kZeroSlot).  Each reset[k] names a source slot, so the reset
// map is a binary matrix in which every column has at most a single 1.
struct Transition {
  int from = 0;
  double rate = 0.0;
  int to = 0;
  std::vector<int> reset;
};

struct ShsModel {
  int n_servers = 0;                     // age slots beyond the monitor
  std::vector<std::string> states;       // human-readable labels
  std::vector<std::vector<int>> growth;  // 0/1 growth mask per state
  std::vector<Transition> transitions;

  int width() const { return n_servers + 1; }  // monitor is slot 0
  int n_states() const { return static_cast<int>(states.size()); }

  // Structural checks: rates >= 0, indices in range, every state has an
  // outgoing transition, reset maps are column-substochastic 0/1 matrices,
  // and the monitor age grows in every state.  Throws std::invalid_argument
  // naming the offending piece.
  void validate() const;
};

// Dense reset matrix of one transition (row-vector convention x' = x A);
// useful for tests that want the matrix form rather than column selectors.
std::vector<std::vector<double>> reset_matrix(const ShsModel& m,
                                              const Transition& t);

struct SteadyState {
  std::vector<double> pi;  // one probability per state; transient states -> 0
};

struct CorrelationVector {
  // v[s][k]: stationary E[x_k * 1{state == s}]; zero on transient states.
  std::vector<std::vector<double>> v;
};

// ------------------------------------------------------------------ rates

// Device parameters for the shared-edge ("equitable access") system.
// mu1 drives the transmitter (bounded by transmit power), mu2 the local
// processor (bounded by CPU frequency), mu3 the edge server; lambda_e is the
// aggregate Poisson rate of other devices' offloads hitting the same edge
// server.
struct EquitableRates {
  double lambda = 0, p = 0, mu1 = 0, mu2 = 0, mu3 = 0, lambda_e = 0;
  void validate() const;  // throws std::invalid_argument naming the field
};

// Priority device: same three-server layout, no interference by design
// (its packets preempt everyone else's, so nobody affects its age).
struct PrimaryRates {
  double lambda_P = 0, p_P = 0, mu1P = 0, mu2P = 0, mu3 = 0;
  void validate() const;
};

// Low-priority device offloading through the priority device's transmitter:
// mu1 is that shared transmitter's rate, lambda_P_bar the priority offload
// stream (arrival rate times offload probability) that displaces it, and
// lambda_e the other low-priority devices' aggregate stream.
struct SecondaryRates {
  double lambda = 0, p = 0, mu2 = 0, mu1 = 0, mu3 = 0;
  double lambda_e = 0, lambda_P_bar = 0;
  void validate() const;
};

// ---------------------------------------------------------------- builders

// 8-state model of one device among equals (transmitter / local / shared ES).
ShsModel build_equitable_model(const EquitableRates& r);

// 5-state model of the priority device.  lambda_s (the aggregate secondary
// offload rate) is accepted and deliberately ignored: secondary traffic
// cannot touch the priority device's age, and keeping the parameter in the
// signature makes that independence directly testable.
ShsModel build_primary_model(const PrimaryRates& r, double lambda_s = 0.0);

// 10-state model of a secondary device sharing the priority transmitter.
ShsModel build_secondary_model(const SecondaryRates& r);

// ----------------------------------------------------------------- solvers

// States of the unique closed communicating class of the positive-rate jump
// graph, ascending.  Everything outside it is transient (zero stationary
// mass).  Throws std::runtime_error if that class is not unique.
std::vector<int> recurrent_class(const ShsModel& m);

// Balance + normalization via dense LU.  Restricts to the unique closed
// communicating class of the positive-rate jump graph (everything else is
// transient and carries zero mass); throws if that class is not unique or
// the system is ill-conditioned.
SteadyState solve_steady_state(const ShsModel& m);

// Stationary age/state correlations; the assembled system couples all
// recurrent states' age vectors.  Throws on singular/ill-conditioned
// systems or if the solution is not a valid correlation vector.
CorrelationVector solve_correlation(const ShsModel& m, const SteadyState& pi);

// Average age = sum over states of the monitor component of v.
double average_aoi(const ShsModel& m);

// Closed-form average age of the priority device.  The printed expression
// has a removable singularity at mu1P == mu3; within relative distance 1e-6
// of it this throws std::domain_error, and callers should use the
// linear-system path instead (primary_aoi does exactly that).
double primary_aoi_closed_form(const PrimaryRates& r);

// Closed form when safely away from the singularity, linear system otherwise.
double primary_aoi(const PrimaryRates& r);

// Aggregate Poisson offload rate seen from one device: each other device j
// contributes its transmitter departure rate lambda_j*pbar_j*mu1_j /
// (lambda_j*pbar_j + mu1_j) (zero-traffic devices contribute zero).
struct OtherDevice {
  double lambda = 0, p = 0, mu1 = 0;
};
double exogenous_rate(const std::vector<OtherDevice>& others);

}  // namespace mec
