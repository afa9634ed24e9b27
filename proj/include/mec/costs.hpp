#pragma once
// Per-device cost models: transmit power + local computation power + a
// weighted average-age term, plus the priority system's revenue transfer.
// Busy fractions are closed-form; the age term is a linear-system solve
// from shs.hpp, so these functions are exact, not sampled.
#include <vector>

#include "mec/shs.hpp"

namespace mec {

// Decision variables of one device.  Secondary devices own no transmitter:
// their policy is (p, mu2) and mu1 is carried along pinned (see
// PolicyBounds in descent.hpp).
struct DevicePolicy {
  double p = 0.0;    // probability of processing locally
  double mu1 = 0.0;  // transmitter rate (power-bounded)
  double mu2 = 0.0;  // local-processor rate (CPU-frequency-bounded)
};

// One device type in a (possibly heterogeneous) population.
struct TypeProfile {
  int id = 0;
  double weight = 1.0;  // probability mass of this type; weights sum to 1
  double lambda = 0.0;  // task arrival rate
  double V = 0.0;       // age weight in the cost
  double eta = 0.0;     // local-power coefficient (power = eta * mu2^3)
  double P_max = 0.0;   // transmit power cap: mu1 in [0, P_max]
  double f_max = 0.0;   // CPU frequency cap: mu2 in [0, f_max]
  void validate() const;  // throws std::invalid_argument naming the field
};

// Parameters of the priority device (not a population type: there is
// exactly one of it).
struct PrimaryParams {
  double lambda_P = 0.0;
  double V = 0.0;
  double eta = 0.0;
  double P_max = 0.0;
  double f_max = 0.0;
  double mu3 = 0.0;  // edge-server rate
  void validate() const;
};

// Additive pieces of a device cost; total is their sum.  revenue is signed:
// negative for the priority device (income), positive for secondaries (fee).
struct CostBreakdown {
  double transmit_power = 0.0;
  double local_power = 0.0;
  double weighted_aoi = 0.0;
  double revenue = 0.0;
  double total = 0.0;
};

// ------------------------------------------------- busy fractions (exact)
// All are long-run occupied-time fractions of LCFS-preemptive M/M/1 servers;
// degenerate numerators give exactly 0 (no epsilon clipping).

// Local processor: lambda*p / (lambda*p + mu2).
double busy_local(double lambda, double p, double mu2);

// Own transmitter: lambda*(1-p) / (lambda*(1-p) + mu1).
double busy_transmit(double lambda, double p, double mu1);

// Priority transmitter, busy with priority packets (secondary pushes are
// dropped or preempted and never delay them).
double busy_tp_priority(double lambda_P, double p_P, double mu1P);

// Priority transmitter, busy with secondary packets arriving at aggregate
// rate lambda_s: admitted only against an idle-of-priority transmitter,
// preempted by every priority arrival.
double busy_tp_secondary(double lambda_s, double lambda_P, double p_P,
                         double mu1P);

// -------------------------------------------------------------- device costs
// All cost functions propagate shs-core exceptions (the descent layer maps
// them to +infinity); V == 0 skips the age solve entirely so that pure-power
// costs stay defined on the whole policy box including zero rates.

// Shared-edge device against exogenous interference lambda_e:
//   J = t_T*mu1 + t_L*eta*mu2^3 + V*aoi.
CostBreakdown cost_equitable_parts(const DevicePolicy& x,
                                   const TypeProfile& tp, double lambda_e,
                                   double mu3);
double cost_equitable(const DevicePolicy& x, const TypeProfile& tp,
                      double lambda_e, double mu3);

// Mean-field variant: lambda_e = (n_devices - 1) * rho * mu3.
CostBreakdown cost_mf_equitable_parts(const DevicePolicy& x,
                                      const TypeProfile& tp, double rho,
                                      int n_devices, double mu3);
double cost_mf_equitable(const DevicePolicy& x, const TypeProfile& tp,
                         double rho, int n_devices, double mu3);

// Priority device with secondary offload demand lambda_s and price alpha:
//   J_P = (t_TP1 + t_TP2)*mu1P + t_LP*eta*mu2P^3 + V*aoi_P - alpha*t_TP2.
// Its age is independent of lambda_s; only the busy/revenue terms see it.
CostBreakdown cost_primary_parts(const DevicePolicy& x,
                                 const PrimaryParams& pp, double lambda_s,
                                 double alpha);
double cost_primary(const DevicePolicy& x, const PrimaryParams& pp,
                    double lambda_s, double alpha);

// Secondary device: local power + age + fee alpha*t_TP2*lambda*(1-p) for
// the transmitter time it consumes.  xs.mu1 is ignored (shared transmitter);
// the primary policy supplies mu1P and the priority stream lambda_P*(1-p_P).
CostBreakdown cost_secondary_parts(const DevicePolicy& xs,
                                   const TypeProfile& tp,
                                   const DevicePolicy& xp,
                                   const PrimaryParams& pp, double lambda_e,
                                   double lambda_s, double alpha);
double cost_secondary(const DevicePolicy& xs, const TypeProfile& tp,
                      const DevicePolicy& xp, const PrimaryParams& pp,
                      double lambda_e, double lambda_s, double alpha);

// Mean-field variant: lambda_e = (n_devices-1)*mu1P*rho and
// lambda_s = n_devices*mu1P*rho, with mu1P taken from xp.
CostBreakdown cost_mf_secondary_parts(const DevicePolicy& xs,
                                      const TypeProfile& tp,
                                      const DevicePolicy& xp,
                                      const PrimaryParams& pp, double rho,
                                      int n_devices, double alpha);
double cost_mf_secondary(const DevicePolicy& xs, const TypeProfile& tp,
                         const DevicePolicy& xp, const PrimaryParams& pp,
                         double rho, int n_devices, double alpha);

}  // namespace mec
