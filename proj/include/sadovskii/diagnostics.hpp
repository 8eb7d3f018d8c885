#pragma once

#include <vector>

#include "sadovskii/boundary.hpp"
#include "sadovskii/greens.hpp"
#include "sadovskii/grid.hpp"
#include "sadovskii/solver.hpp"

namespace sadovskii {

// Virial (Pohozaev-type) identity of traveling-wave patches:
//   E = (3/4) W mu + (1/2) gamma ||w||_1.
// Returns |E - 3/4 W mu - 1/2 gamma m| / E. Small only at converged states;
// O(1) on arbitrary input.
double pohozaev_residual(const PatchDensity& w, const Multipliers& m, double energy_value);

// Independent speed recovery from the patch alone,
//   W = ||w||_1^{-1} (1/2pi) intint (x2 + y2) / |x - y*|^2 w(y) w(x),
// pairwise midpoint quadrature over occupied cells. threads > 1 splits the
// outer loop deterministically (fixed partition, ordered reduction).
double speed_from_patch(const PatchDensity& w, int threads = 1);

// u(0,0) / (2W) - 1; strictly positive at converged states (the dipole
// center moves faster than twice the translation speed).
double central_speed_margin(const PatchDensity& w, const Multipliers& m);

struct TouchingReport {
  bool touching = false;   // gamma == 0 and the first grid row is occupied
  double clearance = 0.0;  // largest rho with psi - W x2 > 0 on |x| < rho
};
TouchingReport touching_report(const PatchDensity& w, const StreamField& psi,
                               const Multipliers& m);

// Row-wise boundary: on every occupied row the half-width l solves
// psi(l, s) = W s + gamma by linear interpolation between cell centers;
// the touching abscissa solves u(a, 0) = W by bisection. Throws
// SolverError when an occupied row has no sign change.
BoundaryCurve boundary_extract(const PatchDensity& w, const StreamField& psi,
                               const Multipliers& m);

// Contact angle of the boundary with the symmetry axis, from the
// least-squares slope of l(s) over the lowest rows (>= 5 samples):
// angle = atan(1/|dl/ds|), 90 degrees for a vertical-contact boundary.
double angle_probe(const BoundaryCurve& boundary, int rows = 5);

struct ShapeReport {
  double max_height = 0.0;        // interpolated top of the patch on the axis column
  double touching_length = 0.0;   // 2a
  double area = 0.0;              // mass
  double vertical_centroid = 0.0; // impulse / mass
  double central_speed = 0.0;     // u(0, 0)
  double W = 0.0;
  double gamma = 0.0;
  double energy = 0.0;
  // normalized by max_height = 1
  double touching_length_norm = 0.0; // / H
  double area_norm = 0.0;            // / H^2
  double vertical_centroid_norm = 0.0;
  double contact_angle_deg = 0.0;
};
// Precondition: touching solution (gamma = 0); throws SolverError otherwise.
ShapeReport shape_report(const PatchDensity& w, const StreamField& psi, const Multipliers& m,
                         double energy_value);

struct ScalingRow {
  double mu = 0.0;
  double mass = 0.0;
  double W = 0.0;
  double energy = 0.0;
  double support_radius = 0.0;
  double gamma = 0.0;
};
struct ScalingStudy {
  std::vector<ScalingRow> rows;
  // log-log least-squares slopes over mu, with their fit standard errors
  double slope_mass = 0.0;
  double slope_W = 0.0;
  double slope_energy = 0.0;
  double slope_radius = 0.0;
  double se_mass = 0.0;
  double se_W = 0.0;
  double se_energy = 0.0;
  double se_radius = 0.0;
};
// Solves the relaxation at every mu (auto-sized window per mu) and fits
// power laws; expected slopes 2/3, 1/3, 4/3, 1/3. Requires >= 3 values and
// gamma = 0 at each solution.
ScalingStudy scaling_study(const std::vector<double>& mu_values, const SolverConfig& base);

}  // namespace sadovskii
