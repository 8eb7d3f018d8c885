#pragma once

#include <memory>
#include <vector>

#include "sadovskii/boundary.hpp"
#include "sadovskii/grid.hpp"

namespace sadovskii {

// Green's function of -Laplace on the upper half-plane with Dirichlet
// condition on the axis,
//   G(x, y) = (1/4pi) log(1 + 4 x2 y2 / |x - y|^2),
// positive, symmetric, vanishing as x2 or y2 -> 0 and as |x - y| -> inf.
// Preconditions: x2 > 0, y2 > 0, x != y.
double green_kernel(double x1, double x2, double y1, double y2);

// G split into the free-space part -(1/2pi) log|x - y| and the image
// correction +(1/2pi) log|x - y*| with y* = (y1, -y2). The parts sum back
// to green_kernel through |x - y*|^2 = |x - y|^2 + 4 x2 y2.
struct KernelSplit {
  double free_part = 0.0;
  double image_part = 0.0;
};
KernelSplit kernel_split(double x1, double x2, double y1, double y2);

// Stream function sampled at cell centers, same layout as PatchDensity.
struct StreamField {
  enum class Provenance { direct, fast };
  HalfPlaneGrid grid;
  std::vector<double> psi;
  Provenance provenance = Provenance::direct;

  double at(int i, int j) const { return psi[static_cast<std::size_t>(j) * grid.n1 + i]; }
};

// Discrete convolution kernel shared by the direct and fast field paths.
//
// Per source cell the free part is the exact mean of -(1/2pi) log|x - y|
// over the cell (closed-form corner antiderivative, integrable across the
// self-cell singularity) and the image part is the exact mean of
// +(1/2pi) log|x - y*| over the reflected cell. The per-cell contribution is
// therefore the exact integral of G(x, .) over the source cell, so the
// discrete field of a cell-aligned indicator patch equals the continuum
// stream function at the evaluation point. Both paths evaluate identical
// sums and may differ only by floating-point reordering.
double free_log_cell_mean(double dx1, double dx2, double h1, double h2);

// Evaluates stream fields and energies on one fixed grid. Owns the
// tabulated kernel and the zero-padded FFT plans (plans are deterministic;
// repeated runs give bitwise identical fields).
class FieldEvaluator {
public:
  explicit FieldEvaluator(const HalfPlaneGrid& grid);
  ~FieldEvaluator();
  FieldEvaluator(const FieldEvaluator&) = delete;
  FieldEvaluator& operator=(const FieldEvaluator&) = delete;

  const HalfPlaneGrid& grid() const { return grid_; }

  // O(N^2) reference summation over the kernel table
  StreamField direct(const PatchDensity& w) const;

  // zero-padded FFT convolution (free part) plus convolution in x1
  // combined with a row-reversal correlation in x2 (image part)
  StreamField fast(const PatchDensity& w) const;

  // direct summation at an arbitrary point of the closed half-plane
  double direct_at(const PatchDensity& w, double x1, double x2) const;

  // E(w) = 1/2 h1 h2 sum psi_fast * w
  double energy(const PatchDensity& w) const;
  double energy(const PatchDensity& w, const StreamField& psi) const;

private:
  struct Impl;
  HalfPlaneGrid grid_;
  std::unique_ptr<Impl> impl_;
};

// One-shot conveniences building a FieldEvaluator internally.
StreamField stream_field_direct(const PatchDensity& w);
StreamField stream_field_fast(const PatchDensity& w);
double energy(const PatchDensity& w);

// Horizontal fluid speed on the symmetry axis of the odd-in-x2 extension,
//   u(x1, 0) = (1/pi) int y2 / ((y1 - x1)^2 + y2^2) w(y) dy,
// midpoint quadrature at cell centers. Even in x1 for symmetric patches,
// strictly positive for nonzero w >= 0.
double horizontal_velocity_on_axis(const PatchDensity& w, double x1);

// Same velocity integral evaluated at (0, x2) through the image-kernel form
//   (1/2pi) int (x2 + y2) / |x - y*|^2 w(y) dy,
// midpoint quadrature; quadrature counterpart of nonlocal_axis_profile.
double vertical_axis_velocity_quadrature(const PatchDensity& w, double x2);

// Closed-form profile of the same quantity for a patch given by its row
// half-widths: g(x2) = (1/pi) sum_rows h2 * atan(l / (s + x2)), the exact
// x1 integral taken row by row. Strictly decreasing in x2 >= 0.
// Precondition: x2 >= 0.
double nonlocal_axis_profile(const BoundaryCurve& boundary, double h2, double x2);

}  // namespace sadovskii
