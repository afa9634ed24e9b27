#include "mec/costs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

// Cost assembly: every cost is (busy fractions) x (power prices) + V x (age).
// Busy fractions of LCFS-preemptive exponential servers are closed-form
// occupancy ratios; the age term reuses the linear-system solvers, so the
// only approximation anywhere in this file is IEEE arithmetic.

namespace mec {
namespace {

void require(bool ok, const char* type, const char* field, const char* what) {
  if (ok) return;
  std::ostringstream os;
  os << type << "." << field << " " << what;
  throw std::invalid_argument(os.str());
}

void check_nonneg(double v, const char* type, const char* field) {
  require(std::isfinite(v) && v >= 0.0, type, field, "must be finite and >= 0");
}

void check_rate(double v, const char* type, const char* field) {
  require(std::isfinite(v) && v > 0.0, type, field, "must be finite and > 0");
}

void check_prob(double v, const char* type, const char* field) {
  require(std::isfinite(v) && v >= 0.0 && v <= 1.0, type, field,
          "must lie in [0, 1]");
}

void check_policy(const DevicePolicy& x, const char* who) {
  check_prob(x.p, who, "p");
  check_nonneg(x.mu1, who, "mu1");
  check_nonneg(x.mu2, who, "mu2");
}

double finish(CostBreakdown& parts) {
  parts.total =
      parts.transmit_power + parts.local_power + parts.weighted_aoi +
      parts.revenue;
  return parts.total;
}

}  // namespace

void TypeProfile::validate() const {
  check_nonneg(weight, "TypeProfile", "weight");
  check_nonneg(lambda, "TypeProfile", "lambda");
  check_nonneg(V, "TypeProfile", "V");
  check_nonneg(eta, "TypeProfile", "eta");
  check_nonneg(P_max, "TypeProfile", "P_max");
  check_nonneg(f_max, "TypeProfile", "f_max");
}

void PrimaryParams::validate() const {
  check_rate(lambda_P, "PrimaryParams", "lambda_P");
  check_nonneg(V, "PrimaryParams", "V");
  check_nonneg(eta, "PrimaryParams", "eta");
  check_nonneg(P_max, "PrimaryParams", "P_max");
  check_nonneg(f_max, "PrimaryParams", "f_max");
  check_rate(mu3, "PrimaryParams", "mu3");
}

// ------------------------------------------------- busy fractions (exact)

double busy_local(double lambda, double p, double mu2) {
  const double offered = lambda * p;
  if (offered <= 0.0) return 0.0;
  return offered / (offered + mu2);
}

double busy_transmit(double lambda, double p, double mu1) {
  const double offered = lambda * (1.0 - p);
  if (offered <= 0.0) return 0.0;
  return offered / (offered + mu1);
}

double busy_tp_priority(double lambda_P, double p_P, double mu1P) {
  return busy_transmit(lambda_P, p_P, mu1P);
}

// A secondary packet occupies the shared transmitter only while no priority
// packet does.  Watching the transmitter as a three-state chain (idle /
// serving-secondary / serving-priority), a secondary admission needs the
// idle state (entered at rate lambda_s, left at rate mu1P plus the priority
// stream) and then survives until its own completion against preemption:
//   t = lambda_s/(lambda_s + mu1P + lambda_P*pbar_P)
//       * mu1P/(mu1P + lambda_P*pbar_P).
double busy_tp_secondary(double lambda_s, double lambda_P, double p_P,
                         double mu1P) {
  if (lambda_s <= 0.0) return 0.0;
  const double preempt = lambda_P * (1.0 - p_P);
  const double leave = mu1P + preempt;
  if (leave <= 0.0) return 0.0;  // packets neither finish nor get displaced
  return lambda_s / (lambda_s + leave) * (mu1P / leave);
}

// -------------------------------------------------------------- device costs

CostBreakdown cost_equitable_parts(const DevicePolicy& x,
                                   const TypeProfile& tp, double lambda_e,
                                   double mu3) {
  tp.validate();
  check_policy(x, "DevicePolicy");
  check_nonneg(lambda_e, "cost_equitable", "lambda_e");
  check_rate(mu3, "cost_equitable", "mu3");

  CostBreakdown parts;
  parts.transmit_power = busy_transmit(tp.lambda, x.p, x.mu1) * x.mu1;
  parts.local_power =
      busy_local(tp.lambda, x.p, x.mu2) * tp.eta * x.mu2 * x.mu2 * x.mu2;
  if (tp.V > 0.0) {
    const EquitableRates r{tp.lambda, x.p, x.mu1, x.mu2, mu3, lambda_e};
    parts.weighted_aoi = tp.V * average_aoi(build_equitable_model(r));
  }
  finish(parts);
  return parts;
}

double cost_equitable(const DevicePolicy& x, const TypeProfile& tp,
                      double lambda_e, double mu3) {
  return cost_equitable_parts(x, tp, lambda_e, mu3).total;
}

CostBreakdown cost_mf_equitable_parts(const DevicePolicy& x,
                                      const TypeProfile& tp, double rho,
                                      int n_devices, double mu3) {
  check_nonneg(rho, "cost_mf_equitable", "rho");
  require(n_devices >= 1, "cost_mf_equitable", "n_devices", "must be >= 1");
  check_rate(mu3, "cost_mf_equitable", "mu3");
  // The mean field replaces the other n-1 devices by their average edge
  // load: each contributes rho * mu3 worth of offload traffic.
  const double lambda_e = (n_devices - 1) * rho * mu3;
  return cost_equitable_parts(x, tp, lambda_e, mu3);
}

double cost_mf_equitable(const DevicePolicy& x, const TypeProfile& tp,
                         double rho, int n_devices, double mu3) {
  return cost_mf_equitable_parts(x, tp, rho, n_devices, mu3).total;
}

CostBreakdown cost_primary_parts(const DevicePolicy& x,
                                 const PrimaryParams& pp, double lambda_s,
                                 double alpha) {
  pp.validate();
  check_policy(x, "DevicePolicy");
  check_nonneg(lambda_s, "cost_primary", "lambda_s");
  check_nonneg(alpha, "cost_primary", "alpha");

  // The transmitter burns power for its own packets and for the admitted
  // secondary ones; the latter time is sold at price alpha.
  const double t_own = busy_tp_priority(pp.lambda_P, x.p, x.mu1);
  const double t_sold = busy_tp_secondary(lambda_s, pp.lambda_P, x.p, x.mu1);

  CostBreakdown parts;
  parts.transmit_power = (t_own + t_sold) * x.mu1;
  parts.local_power =
      busy_local(pp.lambda_P, x.p, x.mu2) * pp.eta * x.mu2 * x.mu2 * x.mu2;
  parts.revenue = -alpha * t_sold;
  if (pp.V > 0.0) {
    const PrimaryRates r{pp.lambda_P, x.p, x.mu1, x.mu2, pp.mu3};
    parts.weighted_aoi = pp.V * primary_aoi(r);
  }
  finish(parts);
  return parts;
}

double cost_primary(const DevicePolicy& x, const PrimaryParams& pp,
                    double lambda_s, double alpha) {
  return cost_primary_parts(x, pp, lambda_s, alpha).total;
}

CostBreakdown cost_secondary_parts(const DevicePolicy& xs,
                                   const TypeProfile& tp,
                                   const DevicePolicy& xp,
                                   const PrimaryParams& pp, double lambda_e,
                                   double lambda_s, double alpha) {
  tp.validate();
  pp.validate();
  check_policy(xs, "DevicePolicy");
  check_policy(xp, "DevicePolicy");
  check_nonneg(lambda_e, "cost_secondary", "lambda_e");
  check_nonneg(lambda_s, "cost_secondary", "lambda_s");
  check_nonneg(alpha, "cost_secondary", "alpha");

  CostBreakdown parts;
  parts.local_power =
      busy_local(tp.lambda, xs.p, xs.mu2) * tp.eta * xs.mu2 * xs.mu2 * xs.mu2;
  // Fee: alpha per unit of transmitter time, prorated by this device's share
  // lambda*(1-p) of the aggregate secondary demand that occupies it.
  const double t_sold = busy_tp_secondary(lambda_s, pp.lambda_P, xp.p, xp.mu1);
  parts.revenue = alpha * t_sold * tp.lambda * (1.0 - xs.p);
  if (tp.V > 0.0) {
    const SecondaryRates r{tp.lambda,      xs.p,     xs.mu2, xp.mu1,
                           pp.mu3,         lambda_e, pp.lambda_P * (1.0 - xp.p)};
    parts.weighted_aoi = tp.V * average_aoi(build_secondary_model(r));
  }
  finish(parts);
  return parts;
}

double cost_secondary(const DevicePolicy& xs, const TypeProfile& tp,
                      const DevicePolicy& xp, const PrimaryParams& pp,
                      double lambda_e, double lambda_s, double alpha) {
  return cost_secondary_parts(xs, tp, xp, pp, lambda_e, lambda_s, alpha).total;
}

CostBreakdown cost_mf_secondary_parts(const DevicePolicy& xs,
                                      const TypeProfile& tp,
                                      const DevicePolicy& xp,
                                      const PrimaryParams& pp, double rho,
                                      int n_devices, double alpha) {
  check_nonneg(rho, "cost_mf_secondary", "rho");
  require(n_devices >= 1, "cost_mf_secondary", "n_devices", "must be >= 1");
  check_policy(xp, "DevicePolicy");
  // Here rho is the mean offload demand per unit of shared-transmitter
  // capacity, so each of the other n-1 secondaries contributes mu1P * rho
  // of interference and all n of them mu1P * rho of transmitter demand.
  const double lambda_e = (n_devices - 1) * xp.mu1 * rho;
  const double lambda_s = n_devices * xp.mu1 * rho;
  return cost_secondary_parts(xs, tp, xp, pp, lambda_e, lambda_s, alpha);
}

double cost_mf_secondary(const DevicePolicy& xs, const TypeProfile& tp,
                         const DevicePolicy& xp, const PrimaryParams& pp,
                         double rho, int n_devices, double alpha) {
  return cost_mf_secondary_parts(xs, tp, xp, pp, rho, n_devices, alpha).total;
}

}  // namespace mec
