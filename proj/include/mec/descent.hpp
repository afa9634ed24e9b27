#pragma once
// Projected block-coordinate descent over the policy box, driven by central
// finite differences of the (linear-solve-backed) cost surfaces.  Objectives
// may throw or return non-finite values on degenerate rate combinations;
// the descent treats those points as +infinity and never steps onto them.
#include <cstdint>
#include <functional>
#include <optional>

#include "mec/costs.hpp"

namespace mec {

// Coordinate-wise box for a DevicePolicy.  A coordinate with lo == hi is
// pinned and skipped by the descent; secondary devices pin mu1 this way.
struct PolicyBounds {
  DevicePolicy lo;
  DevicePolicy hi;
  void validate() const;  // lo <= hi, finite; throws std::invalid_argument
};

// Shared knob block for the descent and the fixed-point solvers.
struct SolverConfig {
  double eps1 = 1e-5;   // mean-field fixed-point tolerance
  double eps2 = 1e-6;   // coordinate tolerance: p, mu1
  double eps3 = 1e-6;   // coordinate tolerance: mu2
  double gamma1 = 0.5;  // mean-field damping in (0, 1]
  double gamma2 = 1e-2; // descent step: p, mu1 (backtracking-halved)
  double gamma3 = 1e-2; // descent step: mu2
  double fd_h = 1e-6;   // finite-difference step, relative to max(1, |x|)
  int max_outer = 200;
  int max_inner = 500;
  int multi_start = 8;
  int jobs = 1;         // parallel multi-start / sweep workers; <=1 = serial
  std::uint64_t seed = 0;
  double rho0 = 0.5;    // initial mean-field load
  // Pinned initial policies (start 0 of a multi-start; remaining starts are
  // random).  Absent -> box midpoint.
  std::optional<DevicePolicy> init_primary;
  std::optional<DevicePolicy> init_secondary;
  void validate() const;
};

double project_box(double x, double lo, double hi);
DevicePolicy project_box(const DevicePolicy& x, const PolicyBounds& b);

// Plain central difference (f(x+h) - f(x-h)) / 2h.
double fd_gradient(const std::function<double(double)>& f, double x, double h);

// Central difference along one policy coordinate (0 = p, 1 = mu1, 2 = mu2)
// with both probes clamped into the box, which degrades to a one-sided
// difference at an active bound.  h = h_rel * max(1, |x|).  Returns 0 for a
// pinned coordinate.
double fd_gradient(const std::function<double(const DevicePolicy&)>& f,
                   const DevicePolicy& at, int coord, const PolicyBounds& b,
                   double h_rel);

struct DescentResult {
  DevicePolicy x;
  double cost = 0.0;
  bool converged = false;  // sweep-to-sweep movement fell below tolerance
  int sweeps = 0;
};

// One full pass over the free coordinates in fixed order (p, mu1, mu2),
// running each coordinate's projected-gradient loop to its tolerance before
// moving on.  Equal-cost candidates keep the incumbent, so flat coordinates
// never drift.  This is the warm-started unit of the fixed-point solvers.
DevicePolicy coordinate_sweep(
    const std::function<double(const DevicePolicy&)>& objective,
    const DevicePolicy& from, const PolicyBounds& bounds,
    const SolverConfig& cfg);

// Repeated sweeps until the policy stops moving (max-norm <= eps2) or
// cfg.max_outer sweeps elapse; non-convergence is flagged, not thrown.
DescentResult block_descent(
    const std::function<double(const DevicePolicy&)>& objective,
    const DevicePolicy& init, const PolicyBounds& bounds,
    const SolverConfig& cfg);

}  // namespace mec
