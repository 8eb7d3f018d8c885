#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "doctest.h"
#include "sadovskii/greens.hpp"
#include "sadovskii/grid.hpp"
#include "sadovskii/solver.hpp"
#include "sadovskii/symmetry.hpp"

using namespace sadovskii;

namespace {

constexpr double kPi = 3.14159265358979323846;

// psi = x2 (1 - x1^2 - x2^2): the level set psi > W x2 is the disc
// x1^2 + x2^2 < 1 - W, which makes multiplier searches checkable by hand.
StreamField synthetic_field(const HalfPlaneGrid& g) {
  StreamField f{g, std::vector<double>(g.cell_count(), 0.0), StreamField::Provenance::direct};
  for (int j = 0; j < g.n2; ++j)
    for (int i = 0; i < g.n1; ++i) {
      double a = g.x1(i), b = g.x2(j);
      f.psi[static_cast<std::size_t>(j) * g.n1 + i] = b * (1.0 - a * a - b * b);
    }
  return f;
}

int differing_cells(const PatchDensity& a, const PatchDensity& b) {
  int n = 0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    if (a.values[k] != b.values[k]) ++n;
  return n;
}

int fractional_cells(const PatchDensity& w) {
  int n = 0;
  for (double v : w.values)
    if (v > 0.0 && v < 1.0) ++n;
  return n;
}

SolverConfig small_cfg(double mu, double nu) {
  SolverConfig cfg;
  cfg.mu = mu;
  cfg.nu = nu;
  cfg.n1 = 64;
  cfg.n2 = 32;
  return cfg;
}

}  // namespace

TEST_CASE("default window tracks the impulse scale") {
  SolverConfig cfg;
  cfg.mu = 0.05;
  CHECK(cfg.l1() == doctest::Approx(4.0 * std::cbrt(0.05)).epsilon(1e-15));
  cfg.window = 2.5;
  CHECK(cfg.l1() == 2.5);
}

TEST_CASE("half-disc start matches its impulse at machine precision") {
  SolverConfig cfg = small_cfg(2.0 / 3.0, kUnbounded);
  cfg.window = 2.0;
  HalfPlaneGrid g = build_grid(cfg.n1, cfg.n2, cfg.l1(), cfg.l1());
  PatchDensity w = initialize(cfg, g);

  // radius (3 mu / 2)^(1/3) = 1, area pi/2
  CHECK(std::abs(mass(w) - 0.5 * kPi) <= 0.02);
  CHECK(std::abs(impulse(w) - cfg.mu) <= 1e-8 * cfg.mu);
  CHECK(fractional_cells(w) <= 2);
  CHECK(is_steiner_symmetric(w));

  SolverConfig c2 = small_cfg(0.486, kUnbounded);
  c2.window = 1.2;
  HalfPlaneGrid g2 = build_grid(c2.n1, c2.n2, c2.l1(), c2.l1());
  PatchDensity w2 = initialize(c2, g2);
  CHECK(std::abs(mass(w2) - 0.5 * kPi * 0.81) <= 0.02);  // radius 0.9
  CHECK(std::abs(impulse(w2) - c2.mu) <= 1e-8 * c2.mu);
}

TEST_CASE("rectangle start matches impulse and symmetry too") {
  SolverConfig cfg = small_cfg(0.05, kUnbounded);
  cfg.init = SolverConfig::Init::rectangle;
  HalfPlaneGrid g = build_grid(cfg.n1, cfg.n2, cfg.l1(), cfg.l1());
  PatchDensity w = initialize(cfg, g);
  CHECK(mass(w) > 0.0);
  CHECK(std::abs(impulse(w) - cfg.mu) <= 1e-8 * cfg.mu);
  CHECK(is_steiner_symmetric(w));
}

TEST_CASE("initialize rejects bad inputs and too-small windows") {
  SolverConfig cfg = small_cfg(2.0 / 3.0, kUnbounded);
  cfg.window = 1.0;  // half-disc radius is exactly 1: does not fit
  HalfPlaneGrid g = build_grid(cfg.n1, cfg.n2, cfg.l1(), cfg.l1());
  CHECK_THROWS_AS(initialize(cfg, g), WindowTooSmall);

  SolverConfig bad = small_cfg(-1.0, kUnbounded);
  bad.window = 2.0;
  HalfPlaneGrid g2 = build_grid(bad.n1, bad.n2, bad.window, bad.window);
  CHECK_THROWS_AS(initialize(bad, g2), std::invalid_argument);
}

TEST_CASE("level-set patch is the exact indicator of psi - W x2 - gamma > 0") {
  HalfPlaneGrid g = build_grid(64, 32, 1.2, 1.2);
  StreamField psi = synthetic_field(g);

  PatchDensity w = level_set_patch(psi, {0.19, 0.0});
  PatchDensity ref = patch_from_predicate(
      g, [](double a, double b) { return a * a + b * b < 0.81; });
  CHECK(differing_cells(w, ref) == 0);

  // a huge flux constant empties the patch
  CHECK(mass(level_set_patch(psi, {0.19, 5.0})) == 0.0);

  CHECK_THROWS_AS(level_set_patch(psi, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(level_set_patch(psi, {0.19, -1.0}), std::invalid_argument);
}

TEST_CASE("multiplier search hits the impulse target with a slack cap") {
  HalfPlaneGrid g = build_grid(64, 32, 1.2, 1.2);
  StreamField psi = synthetic_field(g);

  // disc x1^2 + x2^2 < 1 - W with impulse mu = 0.486 wants 1 - W = 0.81
  auto [m, w] = find_multipliers(psi, 0.486, kUnbounded);
  CHECK(std::abs(m.W - 0.19) <= 0.005);
  CHECK(m.gamma == 0.0);
  CHECK(std::abs(impulse(w) - 0.486) <= 1e-8 * 0.486);
  CHECK(std::abs(mass(w) - 1.272) <= 0.02);

  // smaller impulse, larger W: continuum value 1 - (15 mu / 4)^(2/5)
  auto [m2, w2] = find_multipliers(psi, 0.05, kUnbounded);
  CHECK(std::abs(m2.W - 0.8222) <= 0.01);
  CHECK(std::abs(impulse(w2) - 0.05) <= 1e-8 * 0.05);
}

TEST_CASE("binding mass cap pins the mass and raises gamma") {
  HalfPlaneGrid g = build_grid(64, 32, 1.2, 1.2);
  StreamField psi = synthetic_field(g);
  auto [mu_free, w_free] = find_multipliers(psi, 0.05, kUnbounded);
  auto [m, w] = find_multipliers(psi, 0.05, 0.2);
  CHECK(m.gamma > 0.01);
  CHECK(m.gamma < 0.03);
  CHECK(mass(w) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::abs(impulse(w) - 0.05) <= 1e-8 * 0.05);
  CHECK(m.W < mu_free.W);
  CHECK(mass(w_free) > 0.2);
}

TEST_CASE("multiplier search failure modes") {
  HalfPlaneGrid g = build_grid(64, 32, 1.2, 1.2);
  StreamField psi = synthetic_field(g);

  StreamField poisoned = psi;
  poisoned.psi[100] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(find_multipliers(poisoned, 0.05, kUnbounded), NonMonotoneAnomaly);

  // the whole window holds impulse < 10 even at W -> 0
  CHECK_THROWS_AS(find_multipliers(psi, 10.0, kUnbounded), BracketFailure);
  CHECK_THROWS_AS(find_multipliers(psi, 10.0, 1.0), BracketFailure);

  CHECK_THROWS_AS(find_multipliers(psi, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(find_multipliers(psi, 0.05, 0.0), std::invalid_argument);
}

TEST_CASE("one relaxation sweep raises energy and keeps constraints exact") {
  SolverConfig cfg = small_cfg(0.05, 1.0);
  HalfPlaneGrid g = build_grid(cfg.n1, cfg.n2, cfg.l1(), cfg.l1());
  PatchDensity w0 = initialize(cfg, g);
  FieldEvaluator field(g);
  double e0 = field.energy(w0);

  auto [w1, m1] = relax_step(w0, cfg.mu, cfg.nu, field);
  double e1 = field.energy(w1);
  CHECK(e1 > e0);
  CHECK(std::abs(impulse(w1) - cfg.mu) <= 1e-8 * cfg.mu);
  CHECK(mass(w1) <= cfg.nu * (1.0 + 1e-12));
  CHECK(is_steiner_symmetric(w1));
  CHECK(m1.W > 0.0);

  // the energies above came from the FFT path; the reference sum must agree
  CHECK(field.energy(w1, field.direct(w1)) == doctest::Approx(e1).epsilon(1e-10));
}

TEST_CASE("a converged iterate is a fixed point of the sweep") {
  SolverConfig cfg = small_cfg(0.05, 1.0);
  SolveReport rep = solve(cfg);
  REQUIRE(rep.termination == SolveReport::Termination::converged);

  HalfPlaneGrid g = rep.patch.grid;
  FieldEvaluator field(g);
  auto [w1, m1] = relax_step(rep.patch, cfg.mu, cfg.nu, field);
  CompensatedSum diff;
  for (std::size_t k = 0; k < w1.values.size(); ++k)
    diff.add(std::abs(w1.values[k] - rep.patch.values[k]));
  CHECK(diff.value() * g.cell_area() <= 1e-6 * rep.mass);
}

TEST_CASE("reference solve converges with a slack cap and clean trace") {
  SolverConfig cfg;
  cfg.mu = 0.05;
  cfg.nu = 1.0;
  cfg.n1 = 128;
  cfg.n2 = 64;
  SolveReport rep = solve(cfg);

  CHECK(rep.termination == SolveReport::Termination::converged);
  CHECK(rep.multipliers.gamma == 0.0);
  CHECK(rep.multipliers.W > 0.09);
  CHECK(rep.multipliers.W < 0.10);
  CHECK(rep.mass < 1.0);
  CHECK(std::abs(rep.impulse - cfg.mu) <= 1e-8 * cfg.mu);
  CHECK(rep.binary_fraction <= 0.03);
  CHECK(rep.energy_decreases == 0);
  CHECK(rep.oscillation_events == 0);
  CHECK(rep.iterations > 0);
  CHECK(rep.trace.size() == static_cast<std::size_t>(rep.iterations) + 1);
  for (std::size_t k = 1; k < rep.trace.size(); ++k) {
    CHECK(rep.trace[k].energy >= rep.trace[k - 1].energy * (1.0 - 1e-12));
    CHECK(rep.trace[k].iteration == static_cast<int>(k));
  }
  CHECK(rep.trace.back().sym_diff <= cfg.tol_area);
  CHECK(rep.trace.back().energy == rep.energy);
}

TEST_CASE("a slack cap solves identically to no cap at all") {
  SolverConfig capped = small_cfg(0.05, 1.0);
  SolverConfig open = small_cfg(0.05, kUnbounded);
  SolveReport a = solve(capped);
  SolveReport b = solve(open);
  CHECK(a.patch.values == b.patch.values);
  CHECK(a.multipliers.W == b.multipliers.W);
  CHECK(a.multipliers.gamma == 0.0);
  CHECK(b.multipliers.gamma == 0.0);
}

TEST_CASE("zero iteration budget returns the start state") {
  SolverConfig cfg = small_cfg(0.05, 1.0);
  cfg.max_iterations = 0;
  SolveReport rep = solve(cfg);
  HalfPlaneGrid g = build_grid(cfg.n1, cfg.n2, cfg.l1(), cfg.l1());
  PatchDensity w0 = initialize(cfg, g);
  CHECK(rep.termination == SolveReport::Termination::budget_exhausted);
  CHECK(rep.iterations == 0);
  CHECK(rep.patch.values == w0.values);
}

TEST_CASE("binding cap at convergence: mass pinned, slackness holds") {
  SolverConfig cfg = small_cfg(0.4, 1.0);
  SolveReport rep = solve(cfg);
  CHECK(rep.termination == SolveReport::Termination::converged);
  CHECK(rep.multipliers.gamma > 0.005);
  CHECK(rep.multipliers.gamma < 0.03);
  CHECK(rep.mass == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.multipliers.W > 0.14);
  CHECK(rep.multipliers.W < 0.18);
  double slack = rep.multipliers.gamma * (cfg.nu - rep.mass);
  CHECK(std::abs(slack) <= 1e-6 * cfg.nu * std::max(rep.multipliers.gamma, rep.multipliers.W));
}

TEST_CASE("tight cap detaches the patch from the axis") {
  SolverConfig cfg;
  cfg.mu = 0.1;
  cfg.nu = 0.3;
  cfg.n1 = 128;
  cfg.n2 = 64;
  SolveReport rep = solve(cfg);
  CHECK(rep.termination == SolveReport::Termination::converged);
  CHECK(rep.multipliers.gamma > 0.0);
  CHECK(rep.mass == doctest::Approx(0.3).epsilon(1e-9));
  CompensatedSum row0;
  for (int i = 0; i < rep.patch.grid.n1; ++i) row0.add(rep.patch.at(i, 0));
  CHECK(row0.value() == 0.0);
}

TEST_CASE("similarity rescale is exact for power-of-two impulse ratios") {
  SolverConfig cfg = small_cfg(0.05, kUnbounded);
  SolveReport rep = solve(cfg);

  auto [same, msame] = rescale(rep.patch, rep.multipliers, cfg.mu, cfg.mu);
  CHECK(same.values == rep.patch.values);
  CHECK(same.grid == rep.patch.grid);
  CHECK(msame.W == rep.multipliers.W);

  // mu ratio 8 means s = 2 exactly: spacing and W double, gamma quadruples
  auto [up, mup] = rescale(rep.patch, rep.multipliers, cfg.mu, 8.0 * cfg.mu);
  CHECK(up.values == rep.patch.values);
  CHECK(up.grid.h1 == 2.0 * rep.patch.grid.h1);
  CHECK(up.grid.h2 == 2.0 * rep.patch.grid.h2);
  CHECK(mup.W == 2.0 * rep.multipliers.W);
  CHECK(mup.gamma == 4.0 * rep.multipliers.gamma);
  CHECK(impulse(up) == doctest::Approx(8.0 * cfg.mu).epsilon(1e-14));

  auto [back, mback] = rescale(up, mup, 8.0 * cfg.mu, cfg.mu);
  CHECK(back.values == rep.patch.values);
  CHECK(back.grid.h1 == rep.patch.grid.h1);
  CHECK(mback.W == rep.multipliers.W);

  CHECK_THROWS_AS(rescale(rep.patch, rep.multipliers, 0.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(rescale(rep.patch, rep.multipliers, 0.05, -0.1), std::invalid_argument);
}

TEST_CASE("solve validates its configuration") {
  CHECK_THROWS_AS(solve(small_cfg(0.0, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(solve(small_cfg(0.05, -1.0)), std::invalid_argument);

  SolverConfig bad_iter = small_cfg(0.05, 1.0);
  bad_iter.max_iterations = -1;
  CHECK_THROWS_AS(solve(bad_iter), std::invalid_argument);

  SolverConfig bad_tol = small_cfg(0.05, 1.0);
  bad_tol.tol_energy = 0.0;
  CHECK_THROWS_AS(solve(bad_tol), std::invalid_argument);

  SolverConfig cfg = small_cfg(0.05, 1.0);
  HalfPlaneGrid other = build_grid(32, 16, 1.0, 1.0);
  PatchDensity w = zero_patch(other);
  CHECK_THROWS_AS(solve(cfg, {}, &w, nullptr, 1), std::invalid_argument);
}

TEST_CASE("support hitting the window edge aborts the solve") {
  SolverConfig cfg = small_cfg(0.05, 1.0);
  cfg.window = 0.5;
  CHECK_THROWS_AS(solve(cfg), WindowTooSmall);
}

TEST_CASE("checkpoint hook state resumes bit-exactly") {
  SolverConfig cfg = small_cfg(0.05, 1.0);
  cfg.checkpoint_every = 2;

  PatchDensity snap_w = zero_patch(build_grid(2, 1, 1.0, 1.0));
  PatchDensity snap_prev = snap_w;
  bool have_snap = false, have_prev = false;
  CheckpointHook hook = [&](const PatchDensity& w, const PatchDensity* prev,
                            const Multipliers&, int iteration) {
    if (iteration == 2) {
      snap_w = w;
      have_snap = true;
      if (prev) {
        snap_prev = *prev;
        have_prev = true;
      }
    }
  };
  SolveReport full = solve(cfg, hook);
  REQUIRE(have_snap);
  REQUIRE(full.iterations > 2);

  SolveReport resumed = solve(cfg, {}, &snap_w, have_prev ? &snap_prev : nullptr, 2);
  CHECK(resumed.patch.values == full.patch.values);
  CHECK(resumed.multipliers.W == full.multipliers.W);
  CHECK(resumed.energy == full.energy);
  CHECK(resumed.termination == SolveReport::Termination::converged);
  CHECK(resumed.iterations == full.iterations);
}
