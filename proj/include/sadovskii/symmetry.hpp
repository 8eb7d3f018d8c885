#pragma once

#include "sadovskii/grid.hpp"

namespace sadovskii {

// Row-wise symmetric-decreasing rearrangement about the vertical axis.
// Each row's multiset of values is kept and dealt outward from the center,
// center-left first: sorted descending, positions n1/2-1, n1/2, n1/2-2,
// n1/2+1, ... Row sums (hence mass and impulse) and the row value multisets
// (hence every L^p norm) are preserved exactly; energy never decreases.
PatchDensity steiner_symmetrize(const PatchDensity& w);

// True when w is a fixed point of steiner_symmetrize (values compared
// within tol of the dealt layout).
bool is_steiner_symmetric(const PatchDensity& w, double tol = 0.0);

// Whole-cell horizontal shift moving the x1 centroid as close to 0 as the
// grid allows. Throws std::runtime_error if the occupied columns would be
// pushed off the window. Returns the applied shift in cells.
struct RecenterResult {
  PatchDensity patch;
  int shift_cells = 0;
};
RecenterResult recenter(const PatchDensity& w);

}  // namespace sadovskii
