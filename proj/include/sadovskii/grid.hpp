#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace sadovskii {

// Kahan-Neumaier compensated accumulator. Every reduction over cell arrays
// goes through this so results are reproducible and tight tolerances hold
// on large grids.
class CompensatedSum {
public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Uniform cell-centered discretization of the half-plane window
// [-l1, l1] x (0, l2]. n1 is even so the column layout is mirror symmetric
// about the vertical axis; the bottom cell row sits just above the
// symmetry axis x2 = 0. l1 is derived from (n1, h1) so 2*l1 == n1*h1 holds
// exactly in floating point.
struct HalfPlaneGrid {
  int n1 = 0;
  int n2 = 0;
  double h1 = 0.0;
  double h2 = 0.0;

  // center coordinates; written so that x1(mirror(i)) == -x1(i) bitwise
  double x1(int i) const { return (static_cast<double>(i) - 0.5 * (n1 - 1)) * h1; }
  double x2(int j) const { return (static_cast<double>(j) + 0.5) * h2; }
  double l1() const { return 0.5 * n1 * h1; }
  double l2() const { return n2 * h2; }
  double cell_area() const { return h1 * h2; }
  std::size_t cell_count() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
  int mirror(int i) const { return n1 - 1 - i; }

  bool operator==(const HalfPlaneGrid&) const = default;
};

HalfPlaneGrid build_grid(int n1, int n2, double l1, double l2);

// Relaxed vortex patch: one value per cell in [0, 1], row-major with
// x2-major rows (index = j*n1 + i). Vorticity amplitude is normalized to 1,
// so mass and impulse carry the cell area factor.
struct PatchDensity {
  HalfPlaneGrid grid;
  std::vector<double> values;

  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.n1 + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.n1 + i]; }
};

PatchDensity zero_patch(const HalfPlaneGrid& grid);

// Indicator sampled at cell centers: value 1 where region(x1, x2) holds.
PatchDensity patch_from_predicate(const HalfPlaneGrid& grid,
                                  const std::function<bool(double, double)>& region);

// ||w||_1 = h1*h2 * sum of values
double mass(const PatchDensity& w);

// ||x2 w||_1 = h1*h2 * sum of x2-weighted values
double impulse(const PatchDensity& w);

// throws std::invalid_argument if any value is outside [0,1] or not finite
void validate_density(const PatchDensity& w);

}  // namespace sadovskii
