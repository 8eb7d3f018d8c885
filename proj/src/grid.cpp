#include "sadovskii/grid.hpp"

#include <stdexcept>
#include <string>

namespace sadovskii {

HalfPlaneGrid build_grid(int n1, int n2, double l1, double l2) {
  if (n1 < 2 || n1 % 2 != 0)
    throw std::invalid_argument("build_grid: n1 must be even and >= 2, got " + std::to_string(n1));
  if (n2 < 1)
    throw std::invalid_argument("build_grid: n2 must be >= 1, got " + std::to_string(n2));
  if (!(l1 > 0.0) || !(l2 > 0.0))
    throw std::invalid_argument("build_grid: window extents must be positive");
  HalfPlaneGrid g;
  g.n1 = n1;
  g.n2 = n2;
  g.h1 = 2.0 * l1 / n1;
  g.h2 = l2 / n2;
  return g;
}

PatchDensity zero_patch(const HalfPlaneGrid& grid) {
  PatchDensity w;
  w.grid = grid;
  w.values.assign(grid.cell_count(), 0.0);
  return w;
}

PatchDensity patch_from_predicate(const HalfPlaneGrid& grid,
                                  const std::function<bool(double, double)>& region) {
  PatchDensity w = zero_patch(grid);
  for (int j = 0; j < grid.n2; ++j)
    for (int i = 0; i < grid.n1; ++i)
      if (region(grid.x1(i), grid.x2(j))) w.at(i, j) = 1.0;
  return w;
}

double mass(const PatchDensity& w) {
  CompensatedSum s;
  for (double v : w.values) s.add(v);
  return w.grid.cell_area() * s.value();
}

double impulse(const PatchDensity& w) {
  CompensatedSum s;
  for (int j = 0; j < w.grid.n2; ++j) {
    CompensatedSum row;
    for (int i = 0; i < w.grid.n1; ++i) row.add(w.at(i, j));
    s.add(w.grid.x2(j) * row.value());
  }
  return w.grid.cell_area() * s.value();
}

void validate_density(const PatchDensity& w) {
  if (w.values.size() != w.grid.cell_count())
    throw std::invalid_argument("patch density: value count does not match grid");
  for (double v : w.values)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("patch density: value outside [0,1]");
}

}  // namespace sadovskii
