#include "mec/shs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

// The three transition tables.  Balance and correlation equations are always
// GENERATED from these rows (see shs.cpp); nothing downstream hand-codes a
// per-state equation, so the tables are the single source of truth.
//
// Slot layout in every model: 0 = monitor, 1 = transmitter, 2 = local
// processor, 3 = edge server.  Reset entries name the source slot whose age
// the destination slot inherits; kZeroSlot means a brand-new packet (age 0).

namespace mec {
namespace {

constexpr int Z = kZeroSlot;

void require(bool ok, const char* type, const char* field, const char* what) {
  if (ok) return;
  std::ostringstream os;
  os << type << "." << field << " " << what;
  throw std::invalid_argument(os.str());
}

void check_rate(double v, const char* type, const char* field) {
  require(std::isfinite(v) && v > 0.0, type, field, "must be finite and > 0");
}

void check_nonneg(double v, const char* type, const char* field) {
  require(std::isfinite(v) && v >= 0.0, type, field, "must be finite and >= 0");
}

void check_prob(double v, const char* type, const char* field) {
  require(std::isfinite(v) && v >= 0.0 && v <= 1.0, type, field,
          "must lie in [0, 1]");
}

// Small helper so the table transcriptions below read like the tables:
// one line per row, 1-based state numbers.
struct TableBuilder {
  ShsModel m;
  explicit TableBuilder(int n_states, int n_servers) {
    m.n_servers = n_servers;
    m.states.resize(n_states);
    m.growth.resize(n_states);
  }
  void row(int s, double rate, int s2, std::vector<int> reset) {
    m.transitions.push_back({s - 1, rate, s2 - 1, std::move(reset)});
  }
};

}  // namespace

void EquitableRates::validate() const {
  check_rate(lambda, "EquitableRates", "lambda");
  check_prob(p, "EquitableRates", "p");
  check_rate(mu1, "EquitableRates", "mu1");
  check_rate(mu2, "EquitableRates", "mu2");
  check_rate(mu3, "EquitableRates", "mu3");
  check_nonneg(lambda_e, "EquitableRates", "lambda_e");
}

void PrimaryRates::validate() const {
  check_rate(lambda_P, "PrimaryRates", "lambda_P");
  check_prob(p_P, "PrimaryRates", "p_P");
  check_rate(mu1P, "PrimaryRates", "mu1P");
  check_rate(mu2P, "PrimaryRates", "mu2P");
  check_rate(mu3, "PrimaryRates", "mu3");
}

void SecondaryRates::validate() const {
  check_rate(lambda, "SecondaryRates", "lambda");
  check_prob(p, "SecondaryRates", "p");
  check_rate(mu2, "SecondaryRates", "mu2");
  check_rate(mu1, "SecondaryRates", "mu1");
  check_rate(mu3, "SecondaryRates", "mu3");
  check_nonneg(lambda_e, "SecondaryRates", "lambda_e");
  check_nonneg(lambda_P_bar, "SecondaryRates", "lambda_P_bar");
}

ShsModel build_equitable_model(const EquitableRates& r) {
  r.validate();
  const double lp = r.lambda * r.p;        // arrival routed to local
  const double lq = r.lambda * (1 - r.p);  // arrival routed to transmitter
  const double le = r.lambda_e, m1 = r.mu1, m2 = r.mu2, m3 = r.mu3;

  TableBuilder t(8, 3);
  t.m.states = {
      "s1: T freshest, L 2nd-freshest, ES oldest",
      "s2: T freshest, L oldest, ES 2nd-freshest",
      "s3: T 2nd-freshest, L freshest, ES oldest",
      "s4: T idle, L freshest, ES 2nd-freshest",
      "s5: T idle, L 2nd-freshest, ES freshest",
      "s6: T idle, L freshest, ES other-device",
      "s7: T freshest, L 2nd-freshest, ES other-device",
      "s8: T 2nd-freshest, L freshest, ES other-device",
  };
  // Fake updates keep L and the ES formally busy; the transmitter precedes
  // the point where other devices' packets merge in, so its idleness is a
  // real state and its age slot freezes (growth 0) while idle.
  const std::vector<int> on = {1, 1, 1, 1}, idle = {1, 0, 1, 1};
  t.m.growth = {on, on, on, idle, idle, idle, on, on};

  t.row(1, lp, 3, {0, 1, Z, 3});
  t.row(1, lq, 1, {0, Z, 2, 3});
  t.row(1, le, 7, {0, 1, 2, 0});
  t.row(1, m1, 5, {0, Z, 2, 1});
  t.row(1, m2, 1, {2, 1, 2, 2});
  t.row(1, m3, 1, {3, 1, 2, 3});

  t.row(2, lp, 3, {0, 1, Z, 3});
  t.row(2, lq, 2, {0, Z, 2, 3});
  t.row(2, le, 7, {0, 1, 2, 0});
  t.row(2, m1, 5, {0, Z, 2, 1});
  t.row(2, m2, 2, {2, 1, 2, 3});
  t.row(2, m3, 2, {3, 1, 3, 3});

  t.row(3, lp, 3, {0, 1, Z, 3});
  t.row(3, lq, 1, {0, Z, 2, 3});
  t.row(3, le, 8, {0, 1, 2, 0});
  t.row(3, m1, 4, {0, Z, 2, 1});
  t.row(3, m2, 3, {2, 2, 2, 2});
  t.row(3, m3, 3, {3, 1, 2, 3});

  t.row(4, lp, 4, {0, Z, Z, 3});
  t.row(4, lq, 1, {0, Z, 2, 3});
  t.row(4, le, 6, {0, Z, 2, 0});
  t.row(4, m2, 4, {2, Z, 2, 2});
  t.row(4, m3, 4, {3, Z, 2, 3});

  t.row(5, lp, 4, {0, Z, Z, 3});
  t.row(5, lq, 2, {0, Z, 2, 3});
  t.row(5, le, 6, {0, Z, 2, 0});
  t.row(5, m2, 5, {2, Z, 2, 3});
  t.row(5, m3, 5, {3, Z, 3, 3});

  t.row(6, lp, 6, {0, Z, Z, 3});
  t.row(6, lq, 7, {0, Z, 2, 3});
  t.row(6, le, 6, {0, Z, 2, 0});
  t.row(6, m2, 6, {2, Z, 2, 2});
  t.row(6, m3, 6, {3, Z, 2, 3});

  t.row(7, lp, 8, {0, 1, Z, 3});
  t.row(7, lq, 7, {0, Z, 2, 3});
  t.row(7, le, 7, {0, 1, 2, 0});
  t.row(7, m1, 5, {0, Z, 2, 1});
  t.row(7, m2, 7, {2, 1, 2, 2});
  t.row(7, m3, 7, {3, 1, 2, 3});

  t.row(8, lp, 8, {0, 1, Z, 3});
  t.row(8, lq, 7, {0, Z, 2, 3});
  t.row(8, le, 8, {0, 1, 2, 0});
  t.row(8, m1, 4, {0, Z, 2, 1});
  t.row(8, m2, 8, {2, 2, 2, 2});
  t.row(8, m3, 8, {3, 1, 2, 3});

  t.m.validate();
  return std::move(t.m);
}

ShsModel build_primary_model(const PrimaryRates& r, double /*lambda_s*/) {
  // lambda_s deliberately unused: priority packets preempt secondary ones
  // everywhere and secondary arrivals are dropped while a priority packet is
  // in service, so secondary load cannot appear in this chain.
  r.validate();
  const double lp = r.lambda_P * r.p_P;
  const double lq = r.lambda_P * (1 - r.p_P);
  const double m1 = r.mu1P, m2 = r.mu2P, m3 = r.mu3;

  TableBuilder t(5, 3);
  t.m.states = {
      "s1: T_P freshest, L_P 2nd-freshest, ES oldest",
      "s2: T_P freshest, L_P oldest, ES 2nd-freshest",
      "s3: T_P 2nd-freshest, L_P freshest, ES oldest",
      "s4: T_P idle, L_P freshest, ES 2nd-freshest",
      "s5: T_P idle, L_P 2nd-freshest, ES freshest",
  };
  const std::vector<int> on = {1, 1, 1, 1}, idle = {1, 0, 1, 1};
  t.m.growth = {on, on, on, idle, idle};

  t.row(1, lp, 3, {0, 1, Z, 3});
  t.row(1, lq, 1, {0, Z, 2, 3});
  t.row(1, m1, 5, {0, Z, 2, 1});
  t.row(1, m2, 1, {2, 1, 2, 2});
  t.row(1, m3, 1, {3, 1, 2, 3});

  t.row(2, lp, 3, {0, 1, Z, 3});
  t.row(2, lq, 2, {0, Z, 2, 3});
  t.row(2, m1, 5, {0, Z, 2, 1});
  t.row(2, m2, 2, {2, 1, 2, 3});
  t.row(2, m3, 2, {3, 1, 3, 3});

  t.row(3, lp, 3, {0, 1, Z, 3});
  t.row(3, lq, 1, {0, Z, 2, 3});
  t.row(3, m1, 4, {0, Z, 2, 1});
  t.row(3, m2, 3, {2, 2, 2, 2});
  t.row(3, m3, 3, {3, 1, 2, 3});

  t.row(4, lp, 4, {0, Z, Z, 3});
  t.row(4, lq, 1, {0, Z, 2, 3});
  t.row(4, m2, 4, {2, Z, 2, 2});
  t.row(4, m3, 4, {3, Z, 2, 3});

  t.row(5, lp, 4, {0, Z, Z, 3});
  t.row(5, lq, 2, {0, Z, 2, 3});
  t.row(5, m2, 5, {2, Z, 2, 3});
  t.row(5, m3, 5, {3, Z, 3, 3});

  t.m.validate();
  return std::move(t.m);
}

ShsModel build_secondary_model(const SecondaryRates& r) {
  r.validate();
  const double lp = r.lambda * r.p;
  const double lq = r.lambda * (1 - r.p);
  const double le = r.lambda_e, lP = r.lambda_P_bar;
  const double m1 = r.mu1, m2 = r.mu2, m3 = r.mu3;

  TableBuilder t(10, 3);
  t.m.states = {
      "s1: T_P freshest, L 2nd-freshest, ES oldest",
      "s2: T_P freshest, L oldest, ES 2nd-freshest",
      "s3: T_P freshest, L 2nd-freshest, ES priority",
      "s4: T_P 2nd-freshest, L freshest, ES oldest",
      "s5: T_P priority, L freshest, ES 2nd-freshest",
      "s6: T_P 2nd-freshest, L freshest, ES priority",
      "s7: T_P priority, L freshest, ES priority",
      "s8: T_P priority, L 2nd-freshest, ES freshest",
      "s9: T_P oldest, L freshest, ES 2nd-freshest",
      "s10: T_P oldest, L 2nd-freshest, ES freshest",
  };
  // Fake updates run in every server here, so every age slot always grows.
  t.m.growth.assign(10, {1, 1, 1, 1});

  // Row order within each state: lambda*p, lambda*pbar, lambda_e,
  // lambda_P_bar, mu1, mu2, mu3 (exactly seven rows per state).
  t.row(1, lp, 4, {0, 1, Z, 3});
  t.row(1, lq, 1, {0, Z, 2, 3});
  t.row(1, le, 9, {0, 0, 2, 3});
  t.row(1, lP, 5, {0, 0, 2, 3});
  t.row(1, m1, 10, {0, 1, 2, 1});
  t.row(1, m2, 1, {2, 1, 2, 2});
  t.row(1, m3, 1, {3, 1, 2, 3});

  t.row(2, lp, 4, {0, 1, Z, 3});
  t.row(2, lq, 2, {0, Z, 2, 3});
  t.row(2, le, 10, {0, 0, 2, 3});
  t.row(2, lP, 8, {0, 0, 2, 3});
  t.row(2, m1, 10, {0, 1, 2, 1});
  t.row(2, m2, 2, {2, 1, 2, 3});
  t.row(2, m3, 2, {3, 1, 3, 3});

  t.row(3, lp, 6, {0, 1, Z, 3});
  t.row(3, lq, 3, {0, Z, 2, 3});
  t.row(3, le, 6, {0, 0, 2, 3});
  t.row(3, lP, 7, {0, 0, 2, 3});
  t.row(3, m1, 6, {0, 0, 2, 3});
  t.row(3, m2, 3, {2, 1, 2, 2});
  t.row(3, m3, 1, {3, 1, 2, 3});

  t.row(4, lp, 4, {0, 1, Z, 3});
  t.row(4, lq, 1, {0, Z, 2, 3});
  t.row(4, le, 9, {0, 0, 2, 3});
  t.row(4, lP, 5, {0, 0, 2, 3});
  t.row(4, m1, 9, {0, 1, 2, 1});
  t.row(4, m2, 4, {2, 2, 2, 2});
  t.row(4, m3, 4, {3, 1, 2, 3});

  t.row(5, lp, 5, {0, 1, Z, 3});
  t.row(5, lq, 5, {0, 1, 2, 3});
  t.row(5, le, 5, {0, 1, 2, 3});
  t.row(5, lP, 5, {0, 0, 2, 3});
  t.row(5, m1, 6, {0, 1, 2, 1});
  t.row(5, m2, 5, {2, 2, 2, 2});
  t.row(5, m3, 5, {3, 3, 2, 3});

  t.row(6, lp, 6, {0, 1, Z, 3});
  t.row(6, lq, 3, {0, Z, 2, 3});
  t.row(6, le, 6, {0, 0, 2, 3});
  t.row(6, lP, 7, {0, 0, 2, 3});
  t.row(6, m1, 6, {0, 0, 2, 3});
  t.row(6, m2, 6, {2, 2, 2, 2});
  t.row(6, m3, 4, {3, 1, 2, 3});

  t.row(7, lp, 7, {0, 1, Z, 3});
  t.row(7, lq, 7, {0, 1, 2, 3});
  t.row(7, le, 7, {0, 1, 2, 3});
  t.row(7, lP, 7, {0, 0, 2, 3});
  t.row(7, m1, 6, {0, 1, 2, 1});
  t.row(7, m2, 7, {2, 2, 2, 2});
  t.row(7, m3, 5, {3, 3, 2, 3});

  t.row(8, lp, 5, {0, 1, Z, 3});
  t.row(8, lq, 8, {0, 1, 2, 3});
  t.row(8, le, 8, {0, 1, 2, 3});
  t.row(8, lP, 8, {0, 0, 2, 3});
  t.row(8, m1, 6, {0, 1, 2, 1});
  t.row(8, m2, 8, {2, 2, 2, 3});
  t.row(8, m3, 8, {3, 3, 3, 3});

  t.row(9, lp, 9, {0, 1, Z, 3});
  t.row(9, lq, 1, {0, Z, 2, 3});
  t.row(9, le, 9, {0, 0, 2, 3});
  t.row(9, lP, 5, {0, 0, 2, 3});
  t.row(9, m1, 9, {0, 1, 2, 1});
  t.row(9, m2, 9, {2, 2, 2, 2});
  t.row(9, m3, 9, {3, 3, 2, 3});

  t.row(10, lp, 9, {0, 1, Z, 3});
  t.row(10, lq, 2, {0, Z, 2, 3});
  t.row(10, le, 10, {0, 0, 2, 3});
  t.row(10, lP, 8, {0, 0, 2, 3});
  t.row(10, m1, 9, {0, 1, 2, 1});
  t.row(10, m2, 10, {2, 2, 2, 3});
  t.row(10, m3, 10, {3, 3, 3, 3});

  t.m.validate();
  return std::move(t.m);
}

double primary_aoi_closed_form(const PrimaryRates& r) {
  r.validate();
  const double lam = r.lambda_P, p = r.p_P, q = 1 - p;
  const double m1 = r.mu1P, m2 = r.mu2P, m3 = r.mu3;
  if (std::abs(m1 - m3) <= 1e-6 * m3)
    throw std::domain_error(
        "primary_aoi_closed_form: mu1P is within relative 1e-6 of mu3; the "
        "printed expression degenerates there (removable) -- use the "
        "linear-system path");
  const double t1 = (m1 + m2 + m3) / ((m1 + m2) * (m2 + m3));
  const double t2 =
      m1 * m3 * (lam + m2) / (lam * (m1 + m2) * (m2 + m3) * (lam * q + m2));
  const double t3 =
      m2 * m3 * (lam + m1) / (lam * (m1 + m2) * (m1 - m3) * (m1 + lam * p));
  const double t4 =
      m1 * m2 * (lam + m3) / (lam * (m1 - m3) * (m2 + m3) * (m3 + lam * p));
  return t1 + t2 - t3 + t4;
}

double primary_aoi(const PrimaryRates& r) {
  r.validate();
  if (std::abs(r.mu1P - r.mu3) <= 1e-6 * r.mu3)
    return average_aoi(build_primary_model(r));
  return primary_aoi_closed_form(r);
}

double exogenous_rate(const std::vector<OtherDevice>& others) {
  double total = 0.0;
  for (const OtherDevice& d : others) {
    if (!(std::isfinite(d.lambda) && d.lambda >= 0.0))
      throw std::invalid_argument("OtherDevice.lambda must be finite and >= 0");
    if (!(std::isfinite(d.p) && d.p >= 0.0 && d.p <= 1.0))
      throw std::invalid_argument("OtherDevice.p must lie in [0, 1]");
    if (!(std::isfinite(d.mu1) && d.mu1 >= 0.0))
      throw std::invalid_argument("OtherDevice.mu1 must be finite and >= 0");
    const double offered = d.lambda * (1 - d.p);
    const double denom = offered + d.mu1;
    if (denom > 0.0) total += offered * d.mu1 / denom;
  }
  return total;
}

}  // namespace mec
