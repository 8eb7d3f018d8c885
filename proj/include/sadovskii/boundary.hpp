#pragma once

#include <vector>

namespace sadovskii {

// One boundary sample per occupied grid row: at height s the patch occupies
// |x1| < l (row half-width), so the right boundary passes through (l, s).
struct BoundarySample {
  double s = 0.0;
  double l = 0.0;
};

// Right half of the patch boundary, ordered bottom-up, plus the touching
// abscissa a: the point (a, 0) where the boundary meets the symmetry axis,
// located as the root of u(x1, 0) = W on the axis.
struct BoundaryCurve {
  std::vector<BoundarySample> samples;
  double touching_abscissa = 0.0;
};

}  // namespace sadovskii
