#include "sadovskii/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sadovskii {

namespace {

// deal position of rank k on an even row: center-left, center-right,
// next-left, next-right, ...
int deal_position(int n1, int k) {
  return k % 2 == 0 ? n1 / 2 - 1 - k / 2 : n1 / 2 + (k - 1) / 2;
}

}  // namespace

PatchDensity steiner_symmetrize(const PatchDensity& w) {
  const HalfPlaneGrid& g = w.grid;
  PatchDensity out = w;
  std::vector<double> row(g.n1);
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) row[i] = w.at(i, j);
    std::sort(row.begin(), row.end(), std::greater<double>());
    for (int k = 0; k < g.n1; ++k) out.at(deal_position(g.n1, k), j) = row[k];
  }
  return out;
}

bool is_steiner_symmetric(const PatchDensity& w, double tol) {
  PatchDensity s = steiner_symmetrize(w);
  for (std::size_t t = 0; t < w.values.size(); ++t)
    if (std::abs(s.values[t] - w.values[t]) > tol) return false;
  return true;
}

RecenterResult recenter(const PatchDensity& w) {
  const HalfPlaneGrid& g = w.grid;
  CompensatedSum total, weighted;
  for (int j = 0; j < g.n2; ++j)
    for (int i = 0; i < g.n1; ++i) {
      double v = w.at(i, j);
      if (v == 0.0) continue;
      total.add(v);
      weighted.add(v * g.x1(i));
    }
  if (total.value() == 0.0) return {w, 0};

  double centroid = weighted.value() / total.value();
  int shift = -static_cast<int>(std::lround(centroid / g.h1));
  if (shift == 0) return {w, 0};

  int imin = g.n1, imax = -1;
  for (int j = 0; j < g.n2; ++j)
    for (int i = 0; i < g.n1; ++i)
      if (w.at(i, j) != 0.0) {
        imin = std::min(imin, i);
        imax = std::max(imax, i);
      }
  if (imin + shift < 0 || imax + shift > g.n1 - 1)
    throw std::runtime_error("recenter: support would leave the window");

  RecenterResult r{zero_patch(g), shift};
  for (int j = 0; j < g.n2; ++j)
    for (int i = imin; i <= imax; ++i) r.patch.at(i + shift, j) = w.at(i, j);
  return r;
}

}  // namespace sadovskii
