// Brute-force quadrature oracle for the stream function of a rectangle
// indicator: psi(x) = integral of G(x, y) over [a1,b1] x [a2,b2] by composite
// midpoint rule, printed at several refinements so convergence is visible.
// The frozen reference values in the test suite come from this tool.
//
// Usage: stream_oracle [nq]   (default refinements 256, 512, 1024, 2048)

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "sadovskii/greens.hpp"
#include "sadovskii/grid.hpp"

using namespace sadovskii;

namespace {

double midpoint_psi(double x1, double x2, double a1, double b1, double a2, double b2,
                    int nq) {
  double hq1 = (b1 - a1) / nq, hq2 = (b2 - a2) / nq;
  CompensatedSum acc;
  for (int q = 0; q < nq; ++q) {
    double y2 = a2 + (q + 0.5) * hq2;
    CompensatedSum row;
    for (int p = 0; p < nq; ++p) {
      double y1 = a1 + (p + 0.5) * hq1;
      row.add(green_kernel(x1, x2, y1, y2));
    }
    acc.add(row.value());
  }
  return hq1 * hq2 * acc.value();
}

}  // namespace

int main(int argc, char** argv) {
  const double x1 = 3.0, x2 = 1.0;
  const double a1 = -0.5, b1 = 0.5, a2 = 0.5, b2 = 1.5;

  std::vector<int> levels = {256, 512, 1024, 2048};
  if (argc > 1) levels = {std::atoi(argv[1])};

  std::printf("psi at (%g, %g) of the indicator of [%g,%g]x[%g,%g]\n", x1, x2, a1, b1, a2,
              b2);
  for (int nq : levels) {
    double v = midpoint_psi(x1, x2, a1, b1, a2, b2, nq);
    std::printf("  midpoint %5d^2 subcells: %.15e\n", nq, v);
  }

  // the grid evaluation the tests compare against: 128x128 window
  // [-4,4]x(0,4], rectangle resolved exactly by whole cells
  HalfPlaneGrid g = build_grid(128, 128, 4.0, 4.0);
  PatchDensity w = patch_from_predicate(g, [&](double y1, double y2) {
    return y1 > a1 && y1 < b1 && y2 > a2 && y2 < b2;
  });
  std::printf("  cell-mean evaluation:    %.15e (mass %.15e)\n",
              FieldEvaluator(g).direct_at(w, x1, x2), mass(w));
  return 0;
}
