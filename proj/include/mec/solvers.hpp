#pragma once
// Fixed-point equilibrium solvers: mean-field (population against its own
// aggregate), Nash best-response cycling (finite population), and the
// major-minor mean-field (one priority device + a secondary population).
#include <vector>

#include "mec/descent.hpp"

namespace mec {

// Output of the mean-field solvers.  type_policies/type_costs run parallel
// to the input profiles; the primary fields are used by the major-minor
// solver only.  residual is |F(returned policies) - rho| for the returned
// rho, so a converged result certifies the fixed point directly.
struct EquilibriumResult {
  std::vector<DevicePolicy> type_policies;
  std::vector<CostBreakdown> type_costs;
  DevicePolicy primary_policy;
  CostBreakdown primary_cost;
  double rho = 0.0;
  double residual = 0.0;
  std::vector<double> rho_trace;  // rho0 followed by each damped update
  bool converged = false;
  int iterations = 0;  // outer fixed-point iterations of the winning start
};

// Population mean-field equilibrium on the shared-edge system.  Each outer
// iteration: one warm-started coordinate sweep per type against the current
// rho, then the damped consistency update
//   rho <- (1-gamma1)*rho + gamma1 * (1/mu3) * E_phi[ lam*pbar*mu1 / (lam*pbar + mu1) ].
// Stops when the pre-update residual is <= eps1 (which bounds the damped
// step by eps1 as well).  Multi-start over cfg.multi_start random policy
// initializations; the converged start with the lowest population-average
// cost wins.  No converged start -> best effort, flag false.
EquilibriumResult mfe_solve(const std::vector<TypeProfile>& profiles,
                            int n_devices, double mu3,
                            const SolverConfig& cfg);

struct NashResult {
  std::vector<DevicePolicy> policies;
  std::vector<CostBreakdown> costs;  // against the equilibrium interference
  bool converged = false;
  int cycles = 0;
  double max_change = 0.0;  // policy movement of the final cycle
};

// Cyclic best response on the finite shared-edge system: device i runs a
// full block_descent against lambda_e = exogenous_rate(everyone else),
// warm-started from its current policy; a cycle visits every device once.
// Converged when a whole cycle moves no coordinate by more than eps1.
// Best-response dynamics need not converge; the flag reports it honestly.
// devices[i].weight is ignored (these are N concrete devices, not types).
NashResult nash_solve(const std::vector<TypeProfile>& devices, double mu3,
                      const SolverConfig& cfg);

// Major-minor mean-field equilibrium.  Each outer iteration:
//   1. priority device: one sweep of J_P with lambda_s = n * mu1P * rho
//      evaluated inside the objective (the demand it sells to scales with
//      its own transmit rate);
//   2. each secondary type: one sweep against the updated primary policy
//      with lambda_e = (n-1)*mu1P*rho, lambda_s = n*mu1P*rho;
//   3. damped update rho <- (1-gamma1)*rho + gamma1*E_phi[lam*pbar/mu1P],
//      with the expectation clamped to [0, 1e6] (mu1P -> 0 blows it up).
// Secondary policies use (p, mu2) only; mu1 is pinned to 0 in their box.
EquilibriumResult mm_mfe_solve(const PrimaryParams& primary,
                               const std::vector<TypeProfile>& profiles,
                               int n_devices, double alpha,
                               const SolverConfig& cfg);

}  // namespace mec
