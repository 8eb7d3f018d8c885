#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "sadovskii/grid.hpp"

using namespace sadovskii;

namespace {

PatchDensity random_patch(const HalfPlaneGrid& g, std::uint64_t seed) {
  PatchDensity w = zero_patch(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : w.values) v = u(rng);
  return w;
}

}  // namespace

TEST_CASE("build_grid fills spacings and centers from the window") {
  HalfPlaneGrid g = build_grid(4, 2, 1.0, 1.0);
  CHECK(g.n1 == 4);
  CHECK(g.n2 == 2);
  CHECK(g.h1 == 0.5);
  CHECK(g.h2 == 0.5);
  CHECK(g.x1(0) == -0.75);
  CHECK(g.x1(1) == -0.25);
  CHECK(g.x1(2) == 0.25);
  CHECK(g.x1(3) == 0.75);
  CHECK(g.x2(0) == 0.25);
  CHECK(g.x2(1) == 0.75);
  CHECK(g.l1() == 1.0);
  CHECK(g.l2() == 1.0);
  CHECK(2.0 * g.l1() == g.n1 * g.h1);
  CHECK(g.cell_count() == 8);
}

TEST_CASE("build_grid mirror pairing is exact") {
  HalfPlaneGrid g = build_grid(4, 2, 1.0, 1.0);
  CHECK(g.mirror(0) == 3);
  CHECK(g.mirror(1) == 2);
  for (int i = 0; i < g.n1; ++i) CHECK(g.x1(g.mirror(i)) == -g.x1(i));

  HalfPlaneGrid f = build_grid(6, 4, 3.0, 2.0);
  CHECK(f.h1 == 1.0);
  CHECK(f.h2 == 0.5);
  CHECK(f.cell_count() == 24);
  CHECK(f.x1(0) == -2.5);
  CHECK(f.x2(3) == 1.75);
  for (int i = 0; i < f.n1; ++i) CHECK(f.x1(f.mirror(i)) == -f.x1(i));
}

TEST_CASE("build_grid rejects invalid shapes") {
  CHECK_THROWS_AS(build_grid(5, 2, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(0, 2, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(4, 0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(4, 2, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(4, 2, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("mass of simple patches") {
  HalfPlaneGrid g = build_grid(4, 2, 1.0, 1.0);
  PatchDensity w = zero_patch(g);
  CHECK(mass(w) == 0.0);
  CHECK(impulse(w) == 0.0);

  w.at(1, 0) = 1.0;
  CHECK(mass(w) == 0.25);

  PatchDensity full = patch_from_predicate(g, [](double, double) { return true; });
  CHECK(mass(full) == 2.0);
  CHECK(impulse(full) == 1.0);
}

TEST_CASE("impulse weights cells by their height") {
  HalfPlaneGrid g = build_grid(4, 2, 1.0, 1.0);
  PatchDensity w = zero_patch(g);
  w.at(2, 1) = 1.0;  // center at x2 = 0.75
  CHECK(impulse(w) == 0.1875);
}

TEST_CASE("patch_from_predicate samples cell centers") {
  HalfPlaneGrid g = build_grid(256, 128, 1.0, 1.0);
  PatchDensity none = patch_from_predicate(g, [](double, double) { return false; });
  CHECK(mass(none) == 0.0);

  PatchDensity disc = patch_from_predicate(
      g, [](double a, double b) { return a * a + b * b < 0.81; });
  double exact = 0.5 * M_PI * 0.81;
  CHECK(std::abs(mass(disc) - exact) <= 3.0 * g.h1);

  // cell-aligned rectangle is represented exactly
  HalfPlaneGrid c = build_grid(4, 2, 2.0, 2.0);
  PatchDensity rect = patch_from_predicate(
      c, [](double a, double b) { return a > -1.0 && a < 1.0 && b < 1.0; });
  CHECK(mass(rect) == 2.0);
  for (double v : rect.values) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("mass and impulse are linear in the density") {
  HalfPlaneGrid g = build_grid(16, 8, 1.0, 1.0);
  PatchDensity a = random_patch(g, 11);
  PatchDensity b = random_patch(g, 12);
  double s = 0.3, t = 0.5;
  PatchDensity c = zero_patch(g);
  for (std::size_t k = 0; k < c.values.size(); ++k)
    c.values[k] = s * a.values[k] + t * b.values[k];
  validate_density(c);
  CHECK(mass(c) == doctest::Approx(s * mass(a) + t * mass(b)).epsilon(1e-13));
  CHECK(impulse(c) == doctest::Approx(s * impulse(a) + t * impulse(b)).epsilon(1e-13));
}

TEST_CASE("impulse is bounded by the window height times mass") {
  HalfPlaneGrid g = build_grid(16, 8, 1.0, 1.5);
  PatchDensity w = random_patch(g, 21);
  CHECK(impulse(w) <= g.l2() * mass(w) * (1.0 + 1e-15));
}

TEST_CASE("mirror reflection preserves mass and impulse") {
  HalfPlaneGrid g = build_grid(16, 8, 1.0, 1.0);
  PatchDensity w = random_patch(g, 31);
  PatchDensity m = zero_patch(g);
  for (int j = 0; j < g.n2; ++j)
    for (int i = 0; i < g.n1; ++i) m.at(i, j) = w.at(g.mirror(i), j);
  CHECK(mass(m) == doctest::Approx(mass(w)).epsilon(1e-14));
  CHECK(impulse(m) == doctest::Approx(impulse(w)).epsilon(1e-14));
}

TEST_CASE("validate_density rejects out-of-range and malformed values") {
  HalfPlaneGrid g = build_grid(4, 2, 1.0, 1.0);
  PatchDensity w = random_patch(g, 41);
  CHECK_NOTHROW(validate_density(w));

  PatchDensity big = w;
  big.at(0, 0) = 1.5;
  CHECK_THROWS_AS(validate_density(big), std::invalid_argument);

  PatchDensity neg = w;
  neg.at(1, 1) = -0.1;
  CHECK_THROWS_AS(validate_density(neg), std::invalid_argument);

  PatchDensity nan = w;
  nan.at(2, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_density(nan), std::invalid_argument);

  PatchDensity short_vec = w;
  short_vec.values.pop_back();
  CHECK_THROWS_AS(validate_density(short_vec), std::invalid_argument);
}
