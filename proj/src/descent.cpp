#include "mec/descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

// Projected gradient descent, one coordinate at a time.  The cost surfaces
// are smooth inside the box but may blow up (or throw) on its degenerate
// edges, so every objective evaluation is guarded: exceptions and non-finite
// values count as +infinity, candidate steps are clamped to the box width
// (an infinite one-sided gradient then just proposes the far wall), and a
// step is taken only when it strictly lowers the cost.  Strict decrease
// keeps flat coordinates parked, which makes results reproducible to the
// bit across run orders.

namespace mec {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* type, const char* field, const char* what) {
  if (ok) return;
  std::ostringstream os;
  os << type << "." << field << " " << what;
  throw std::invalid_argument(os.str());
}

double get_coord(const DevicePolicy& x, int coord) {
  switch (coord) {
    case 0: return x.p;
    case 1: return x.mu1;
    default: return x.mu2;
  }
}

void set_coord(DevicePolicy& x, int coord, double v) {
  switch (coord) {
    case 0: x.p = v; break;
    case 1: x.mu1 = v; break;
    default: x.mu2 = v; break;
  }
}

// Objective wrapper used by the sweeps: anything that is not an honest
// finite number is treated as an infinitely bad point.
std::function<double(const DevicePolicy&)> guarded(
    const std::function<double(const DevicePolicy&)>& objective) {
  return [&objective](const DevicePolicy& y) -> double {
    double v;
    try {
      v = objective(y);
    } catch (const std::exception&) {
      return kInf;
    }
    return std::isfinite(v) ? v : kInf;
  };
}

// Projected-gradient loop for a single coordinate: repeat (gradient, clamp,
// backtrack) until the coordinate stops moving by more than eps.  `f` must
// already be guarded.  Returns the current cost so the caller can hand it
// to the next coordinate without re-evaluating.
double descend_coordinate(const std::function<double(const DevicePolicy&)>& f,
                          DevicePolicy& x, int coord, const PolicyBounds& b,
                          double gamma, double eps, double fx,
                          const SolverConfig& cfg) {
  const double lo = get_coord(b.lo, coord);
  const double hi = get_coord(b.hi, coord);
  const double width = hi - lo;
  if (!(width > 0.0)) return fx;  // pinned coordinate

  for (int it = 0; it < cfg.max_inner; ++it) {
    const double g = fd_gradient(f, x, coord, b, cfg.fd_h);
    if (std::isnan(g) || g == 0.0) break;  // no usable direction
    double d = -gamma * g;
    if (std::abs(d) > width) d = std::copysign(width, d);

    // Backtracking: halve the displacement until it strictly improves the
    // cost; give up once the proposal is well below the movement tolerance.
    const double xc = get_coord(x, coord);
    bool accepted = false;
    while (std::abs(d) >= 0.25 * eps) {
      const double xn = project_box(xc + d, lo, hi);
      if (xn != xc) {
        DevicePolicy cand = x;
        set_coord(cand, coord, xn);
        const double fn = f(cand);
        if (fn < fx) {
          x = cand;
          fx = fn;
          accepted = true;
          break;
        }
      }
      d *= 0.5;
    }
    if (!accepted) break;
    if (std::abs(get_coord(x, coord) - xc) <= eps) break;
  }
  return fx;
}

}  // namespace

void PolicyBounds::validate() const {
  require(std::isfinite(lo.p) && std::isfinite(hi.p) && lo.p <= hi.p &&
              lo.p >= 0.0 && hi.p <= 1.0,
          "PolicyBounds", "p", "must satisfy 0 <= lo <= hi <= 1");
  require(std::isfinite(lo.mu1) && std::isfinite(hi.mu1) &&
              0.0 <= lo.mu1 && lo.mu1 <= hi.mu1,
          "PolicyBounds", "mu1", "must satisfy 0 <= lo <= hi");
  require(std::isfinite(lo.mu2) && std::isfinite(hi.mu2) &&
              0.0 <= lo.mu2 && lo.mu2 <= hi.mu2,
          "PolicyBounds", "mu2", "must satisfy 0 <= lo <= hi");
}

void SolverConfig::validate() const {
  require(std::isfinite(eps1) && eps1 > 0.0, "SolverConfig", "eps1",
          "must be finite and > 0");
  require(std::isfinite(eps2) && eps2 > 0.0, "SolverConfig", "eps2",
          "must be finite and > 0");
  require(std::isfinite(eps3) && eps3 > 0.0, "SolverConfig", "eps3",
          "must be finite and > 0");
  require(std::isfinite(gamma1) && gamma1 > 0.0 && gamma1 <= 1.0,
          "SolverConfig", "gamma1", "must lie in (0, 1]");
  require(std::isfinite(gamma2) && gamma2 > 0.0, "SolverConfig", "gamma2",
          "must be finite and > 0");
  require(std::isfinite(gamma3) && gamma3 > 0.0, "SolverConfig", "gamma3",
          "must be finite and > 0");
  require(std::isfinite(fd_h) && fd_h > 0.0, "SolverConfig", "fd_h",
          "must be finite and > 0");
  require(max_outer >= 1, "SolverConfig", "max_outer", "must be >= 1");
  require(max_inner >= 1, "SolverConfig", "max_inner", "must be >= 1");
  require(multi_start >= 1, "SolverConfig", "multi_start", "must be >= 1");
  require(jobs >= 0, "SolverConfig", "jobs", "must be >= 0");
  require(std::isfinite(rho0) && rho0 >= 0.0, "SolverConfig", "rho0",
          "must be finite and >= 0");
}

double project_box(double x, double lo, double hi) {
  return std::min(std::max(x, lo), hi);
}

DevicePolicy project_box(const DevicePolicy& x, const PolicyBounds& b) {
  return {project_box(x.p, b.lo.p, b.hi.p),
          project_box(x.mu1, b.lo.mu1, b.hi.mu1),
          project_box(x.mu2, b.lo.mu2, b.hi.mu2)};
}

double fd_gradient(const std::function<double(double)>& f, double x,
                   double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double fd_gradient(const std::function<double(const DevicePolicy&)>& f,
                   const DevicePolicy& at, int coord, const PolicyBounds& b,
                   double h_rel) {
  const double lo = get_coord(b.lo, coord);
  const double hi = get_coord(b.hi, coord);
  if (!(hi > lo)) return 0.0;  // pinned
  const double xc = get_coord(at, coord);
  const double h = h_rel * std::max(1.0, std::abs(xc));
  const double xp = std::min(xc + h, hi);
  const double xm = std::max(xc - h, lo);
  if (xp <= xm) return 0.0;  // box narrower than the probe step
  DevicePolicy up = at, dn = at;
  set_coord(up, coord, xp);
  set_coord(dn, coord, xm);
  return (f(up) - f(dn)) / (xp - xm);
}

DevicePolicy coordinate_sweep(
    const std::function<double(const DevicePolicy&)>& objective,
    const DevicePolicy& from, const PolicyBounds& bounds,
    const SolverConfig& cfg) {
  bounds.validate();
  cfg.validate();
  const auto f = guarded(objective);
  DevicePolicy x = project_box(from, bounds);
  double fx = f(x);
  fx = descend_coordinate(f, x, 0, bounds, cfg.gamma2, cfg.eps2, fx, cfg);
  fx = descend_coordinate(f, x, 1, bounds, cfg.gamma2, cfg.eps2, fx, cfg);
  descend_coordinate(f, x, 2, bounds, cfg.gamma3, cfg.eps3, fx, cfg);
  return x;
}

DescentResult block_descent(
    const std::function<double(const DevicePolicy&)>& objective,
    const DevicePolicy& init, const PolicyBounds& bounds,
    const SolverConfig& cfg) {
  bounds.validate();
  cfg.validate();
  DescentResult out;
  out.x = project_box(init, bounds);
  for (int k = 0; k < cfg.max_outer; ++k) {
    const DevicePolicy next = coordinate_sweep(objective, out.x, bounds, cfg);
    const double delta = std::max(
        {std::abs(next.p - out.x.p), std::abs(next.mu1 - out.x.mu1),
         std::abs(next.mu2 - out.x.mu2)});
    out.x = next;
    out.sweeps = k + 1;
    if (delta <= cfg.eps2) {
      out.converged = true;
      break;
    }
  }
  out.cost = guarded(objective)(out.x);
  return out;
}

}  // namespace mec
