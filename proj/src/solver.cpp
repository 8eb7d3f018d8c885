#include "sadovskii/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sadovskii/diagnostics.hpp"
#include "sadovskii/symmetry.hpp"

namespace sadovskii {

namespace {

struct Cand {
  double key;  // sort key, larger first
  int j, i;
};

// impulse of the strict superlevel set { psi - W x2 - gamma > 0 }; row
// counts are integers, so monotonicity in W and gamma is exact
double level_set_impulse(const StreamField& psi, double W, double gamma) {
  const HalfPlaneGrid& g = psi.grid;
  CompensatedSum acc;
  for (int j = 0; j < g.n2; ++j) {
    double x2 = g.x2(j);
    double thr = W * x2 + gamma;
    long count = 0;
    const double* row = psi.psi.data() + static_cast<std::size_t>(j) * g.n1;
    for (int i = 0; i < g.n1; ++i)
      if (row[i] > thr) ++count;
    if (count > 0) acc.add(x2 * static_cast<double>(count));
  }
  return g.cell_area() * acc.value();
}

// fills cells to 1 in the given order until the impulse budget mu is spent;
// the last cell receives the fractional remainder
PatchDensity fill_ordered(const HalfPlaneGrid& g, const std::vector<Cand>& order, double mu) {
  PatchDensity w = zero_patch(g);
  double area = g.cell_area();
  CompensatedSum filled;
  for (const Cand& c : order) {
    double contrib = area * g.x2(c.j);
    double have = filled.value();
    if (have + contrib < mu) {
      w.at(c.i, c.j) = 1.0;
      filled.add(contrib);
    } else {
      w.at(c.i, c.j) = (mu - have) / contrib;
      return w;
    }
  }
  if (filled.value() < mu * (1.0 - 1e-12))
    throw BracketFailure("impulse fill ran out of candidate cells");
  return w;
}

void sort_candidates(std::vector<Cand>& cands) {
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.key != b.key) return a.key > b.key;
    if (a.j != b.j) return a.j < b.j;
    return a.i < b.i;
  });
}

// level-set patch at (W, gamma) with the boundary cell made fractional so
// that impulse == mu at machine precision. Valid once W has been bisected:
// the fill must stop at a near-zero margin.
PatchDensity margin_fill(const StreamField& psi, double W, double gamma, double mu) {
  const HalfPlaneGrid& g = psi.grid;
  std::vector<Cand> cands;
  cands.reserve(4096);
  double psi_max = 0.0;
  for (int j = 0; j < g.n2; ++j) {
    double x2 = g.x2(j);
    for (int i = 0; i < g.n1; ++i) {
      double m = psi.at(i, j) - W * x2 - gamma;
      psi_max = std::max(psi_max, std::abs(psi.at(i, j)));
      if (m > 0.0) cands.push_back({m, j, i});
    }
  }
  // a thin band below zero in case the bisected W landed on the small side
  std::vector<Cand> low;
  double band = -1e-9 * (psi_max + W * g.l2() + gamma);
  for (int j = 0; j < g.n2; ++j) {
    double x2 = g.x2(j);
    for (int i = 0; i < g.n1; ++i) {
      double m = psi.at(i, j) - W * x2 - gamma;
      if (m <= 0.0 && m > band) low.push_back({m, j, i});
    }
  }
  sort_candidates(cands);
  sort_candidates(low);
  cands.insert(cands.end(), low.begin(), low.end());

  PatchDensity w = fill_ordered(g, cands, mu);

  // the cut must sit at the level-set boundary
  double cut_margin = 0.0;
  for (const Cand& c : cands)
    if (double v = w.at(c.i, c.j); v > 0.0 && v < 1.0) cut_margin = c.key;
  double slack = 1e-8 * (psi_max + W * g.l2() + gamma);
  if (std::abs(cut_margin) > slack)
    throw NonMonotoneAnomaly("impulse fill cut away from the level-set boundary");
  return w;
}

double bisect_W(const StreamField& psi, double gamma, double mu) {
  const HalfPlaneGrid& g = psi.grid;
  double j0 = level_set_impulse(psi, 0.0, gamma);
  if (j0 < mu * (1.0 - 1e-12))
    throw BracketFailure("impulse target " + std::to_string(mu) +
                         " above the field's reachable impulse " + std::to_string(j0));

  double w_hi = 0.0;
  for (int j = 0; j < g.n2; ++j) {
    double x2 = g.x2(j);
    for (int i = 0; i < g.n1; ++i)
      w_hi = std::max(w_hi, (psi.at(i, j) - gamma) / x2);
  }
  w_hi = std::max(w_hi * (1.0 + 1e-12), 1e-300);
  double w_lo = 0.0;
  double j_lo = j0, j_hi = level_set_impulse(psi, w_hi, gamma);

  for (int it = 0; it < 200 && (w_hi - w_lo) > 1e-15 * std::max(w_hi, 1e-300); ++it) {
    double mid = 0.5 * (w_lo + w_hi);
    double jm = level_set_impulse(psi, mid, gamma);
    double slack = 1e-12 * (std::abs(j_lo) + std::abs(j_hi) + 1.0);
    if (jm > j_lo + slack || jm < j_hi - slack)
      throw NonMonotoneAnomaly("level-set impulse not monotone in W");
    if (jm >= mu) {
      w_lo = mid;
      j_lo = jm;
    } else {
      w_hi = mid;
      j_hi = jm;
    }
  }
  double W = 0.5 * (w_lo + w_hi);
  if (!(W > 0.0)) throw BracketFailure("impulse bisection collapsed to W = 0");
  return W;
}

struct InnerSolution {
  bool feasible = false;
  double W = 0.0;
  PatchDensity patch;
  double patch_mass = 0.0;
};

InnerSolution solve_at_gamma(const StreamField& psi, double gamma, double mu) {
  InnerSolution r;
  try {
    r.W = bisect_W(psi, gamma, mu);
  } catch (const BracketFailure&) {
    return r;
  }
  r.patch = margin_fill(psi, r.W, gamma, mu);
  r.patch_mass = mass(r.patch);
  r.feasible = true;
  return r;
}

// impulse-neutral transfer between cells at different heights pinning the
// total mass to target; used only when the mass cap binds
void pin_mass(PatchDensity& w, const StreamField& psi, double W, double gamma, double target) {
  const HalfPlaneGrid& g = w.grid;
  double area = g.cell_area();

  std::vector<Cand> pool;
  for (int j = 0; j < g.n2; ++j) {
    double x2 = g.x2(j);
    for (int i = 0; i < g.n1; ++i)
      pool.push_back({-std::abs(psi.at(i, j) - W * x2 - gamma), j, i});
  }
  sort_candidates(pool);  // smallest |margin| first
  if (pool.size() > 512) pool.resize(512);
  std::sort(pool.begin(), pool.end(), [&](const Cand& a, const Cand& b) {
    if (a.j != b.j) return a.j < b.j;
    return a.i < b.i;
  });

  for (int round = 0; round < 64; ++round) {
    double need = target - mass(w);  // in mass units
    if (std::abs(need) <= 1e-14 * std::max(target, 1.0)) return;
    bool moved = false;
    for (std::size_t qi = pool.size(); qi-- > 0 && !moved;) {
      for (std::size_t pi = 0; pi < qi && !moved; ++pi) {
        const Cand& p = pool[pi];
        const Cand& q = pool[qi];
        double x2p = g.x2(p.j), x2q = g.x2(q.j);
        if (x2p == x2q) continue;
        double dvp = (need / area) * x2q / (x2q - x2p);
        double dvq = -(need / area) * x2p / (x2q - x2p);
        auto headroom = [&](int i, int j, double dv) {
          double v = w.at(i, j);
          return dv > 0.0 ? (1.0 - v) / dv : (dv < 0.0 ? v / -dv : 2.0);
        };
        double t = std::min(1.0, std::min(headroom(p.i, p.j, dvp), headroom(q.i, q.j, dvq)));
        if (t <= 1e-12) continue;
        w.at(p.i, p.j) = std::clamp(w.at(p.i, p.j) + t * dvp, 0.0, 1.0);
        w.at(q.i, q.j) = std::clamp(w.at(q.i, q.j) + t * dvq, 0.0, 1.0);
        moved = true;
      }
    }
    if (!moved) break;
  }
  if (std::abs(target - mass(w)) > 1e-12 * std::max(target, 1.0))
    throw SolverError("mass pinning failed: no transfer candidates left");
}

}  // namespace

double SolverConfig::l1() const { return window > 0.0 ? window : 4.0 * std::cbrt(mu); }

PatchDensity initialize(const SolverConfig& cfg, const HalfPlaneGrid& grid) {
  if (!(cfg.mu > 0.0)) throw std::invalid_argument("initialize: mu must be positive");
  if (cfg.init == SolverConfig::Init::file)
    throw std::invalid_argument("initialize: file starts must be preloaded by the caller");

  std::vector<Cand> order;
  order.reserve(grid.cell_count());
  if (cfg.init == SolverConfig::Init::half_disc) {
    double r = std::cbrt(1.5 * cfg.mu);
    if (r >= grid.l1() || r >= grid.l2())
      throw WindowTooSmall("initialize: half-disc radius " + std::to_string(r) +
                           " does not fit the window");
    for (int j = 0; j < grid.n2; ++j)
      for (int i = 0; i < grid.n1; ++i) {
        double x1 = grid.x1(i), x2 = grid.x2(j);
        order.push_back({-(x1 * x1 + x2 * x2), j, i});
      }
  } else {
    double a = std::cbrt(cfg.mu);  // square block [-a,a] x (0,a], impulse a^3
    if (a >= grid.l1() || a >= grid.l2())
      throw WindowTooSmall("initialize: rectangle start does not fit the window");
    for (int j = 0; j < grid.n2; ++j)
      for (int i = 0; i < grid.n1; ++i)
        order.push_back({-std::max(std::abs(grid.x1(i)), grid.x2(j)), j, i});
  }
  sort_candidates(order);
  PatchDensity w = fill_ordered(grid, order, cfg.mu);

  double err = std::abs(impulse(w) - cfg.mu);
  if (err > cfg.impulse_rel_tol * cfg.mu)
    throw SolverError("initialize: impulse mismatch " + std::to_string(err));
  return w;
}

PatchDensity level_set_patch(const StreamField& psi, const Multipliers& m) {
  if (!(m.W > 0.0)) throw std::invalid_argument("level_set_patch: W must be positive");
  if (!(m.gamma >= 0.0)) throw std::invalid_argument("level_set_patch: gamma must be >= 0");
  const HalfPlaneGrid& g = psi.grid;
  PatchDensity w = zero_patch(g);
  for (int j = 0; j < g.n2; ++j) {
    double thr = m.W * g.x2(j) + m.gamma;
    for (int i = 0; i < g.n1; ++i)
      if (psi.at(i, j) > thr) w.at(i, j) = 1.0;
  }
  return w;
}

std::pair<Multipliers, PatchDensity> find_multipliers(const StreamField& psi, double mu,
                                                      double nu, double impulse_rel_tol) {
  if (!(mu > 0.0)) throw std::invalid_argument("find_multipliers: mu must be positive");
  if (!(nu > 0.0)) throw std::invalid_argument("find_multipliers: nu must be positive");
  for (double v : psi.psi)
    if (!std::isfinite(v)) throw NonMonotoneAnomaly("stream field contains non-finite values");

  InnerSolution base = solve_at_gamma(psi, 0.0, mu);
  if (!base.feasible) throw BracketFailure("no W > 0 reaches the impulse target");
  if (!std::isfinite(nu) || base.patch_mass <= nu * (1.0 + 1e-12)) {
    Multipliers m{base.W, 0.0};
    double err = std::abs(impulse(base.patch) - mu);
    if (err > impulse_rel_tol * mu)
      throw SolverError("find_multipliers: impulse mismatch " + std::to_string(err));
    return {m, std::move(base.patch)};
  }

  // mass cap binds: grow gamma until the capped mass drops below nu, then
  // bisect; infeasible inner problems count as mass below the cap
  double psi_max = 0.0;
  for (double v : psi.psi) psi_max = std::max(psi_max, std::abs(v));
  double g_lo = 0.0, g_hi = -1.0;
  double probe = 1e-6 * psi_max;
  InnerSolution hi_sol;
  for (int it = 0; it < 200; ++it) {
    InnerSolution r = solve_at_gamma(psi, probe, mu);
    if (!r.feasible || r.patch_mass <= nu) {
      g_hi = probe;
      hi_sol = std::move(r);
      break;
    }
    g_lo = probe;
    probe *= 2.0;
  }
  if (g_hi < 0.0) throw BracketFailure("mass cap: no gamma brings mass below nu");

  for (int it = 0; it < 200 && (g_hi - g_lo) > 1e-15 * std::max(g_hi, 1e-300); ++it) {
    double mid = 0.5 * (g_lo + g_hi);
    InnerSolution r = solve_at_gamma(psi, mid, mu);
    if (!r.feasible || r.patch_mass <= nu) {
      g_hi = mid;
      hi_sol = std::move(r);
    } else {
      g_lo = mid;
    }
  }
  if (!hi_sol.feasible)
    throw BracketFailure("mass cap bisection ended on an infeasible gamma");

  pin_mass(hi_sol.patch, psi, hi_sol.W, g_hi, nu);
  double err = std::abs(impulse(hi_sol.patch) - mu);
  if (err > impulse_rel_tol * mu)
    throw SolverError("find_multipliers: impulse mismatch after mass pinning");
  return {Multipliers{hi_sol.W, g_hi}, std::move(hi_sol.patch)};
}

std::pair<PatchDensity, Multipliers> relax_step(const PatchDensity& w, double mu, double nu,
                                                const FieldEvaluator& field,
                                                double impulse_rel_tol) {
  StreamField psi = field.fast(w);
  auto [m, next] = find_multipliers(psi, mu, nu, impulse_rel_tol);
  PatchDensity sym = steiner_symmetrize(next);
  double err = std::abs(impulse(sym) - mu);
  if (err > impulse_rel_tol * mu)
    throw SolverError("relax_step: impulse drifted by " + std::to_string(err));
  if (std::isfinite(nu) && mass(sym) > nu * (1.0 + 1e-8))
    throw SolverError("relax_step: mass cap exceeded");
  return {std::move(sym), m};
}

SolveReport solve(const SolverConfig& cfg) { return solve(cfg, CheckpointHook{}); }

SolveReport solve(const SolverConfig& cfg, const CheckpointHook& on_checkpoint,
                  const PatchDensity* resume_patch, const PatchDensity* resume_prev,
                  int resume_iteration) {
  if (!(cfg.mu > 0.0)) throw std::invalid_argument("solve: mu must be positive");
  if (!(cfg.nu > 0.0)) throw std::invalid_argument("solve: nu must be positive");
  if (cfg.max_iterations < 0) throw std::invalid_argument("solve: max_iterations must be >= 0");
  if (!(cfg.tol_energy > 0.0) || !(cfg.tol_area > 0.0))
    throw std::invalid_argument("solve: tolerances must be positive");

  double l = cfg.l1();
  HalfPlaneGrid grid = build_grid(cfg.n1, cfg.n2, l, l);
  FieldEvaluator field(grid);

  PatchDensity w = resume_patch ? *resume_patch : initialize(cfg, grid);
  if (resume_patch && !(w.grid == grid))
    throw std::invalid_argument("solve: resume patch grid does not match the configuration");
  validate_density(w);

  SolveReport rep;
  double area = grid.cell_area();
  double e_prev = field.energy(w);
  if (resume_iteration == 0)
    rep.trace.push_back({0, e_prev, 0.0, 0.0, mass(w), 0.0});

  PatchDensity prev;  // iterate before w, for cycle detection
  bool have_prev = false;
  if (resume_prev) {
    prev = *resume_prev;
    if (!(prev.grid == grid))
      throw std::invalid_argument("solve: resume history grid does not match");
    have_prev = true;
  }
  Multipliers m;
  bool converged = false;
  int k = resume_iteration;

  while (k < cfg.max_iterations && !converged) {
    ++k;
    auto [next, mk] = relax_step(w, cfg.mu, cfg.nu, field, cfg.impulse_rel_tol);
    m = mk;

    double m_next = mass(next);
    CompensatedSum d1;
    for (std::size_t t = 0; t < next.values.size(); ++t)
      d1.add(std::abs(next.values[t] - w.values[t]));
    double sym_diff = area * d1.value() / m_next;

    if (have_prev && sym_diff > cfg.tol_area) {
      CompensatedSum d2;
      for (std::size_t t = 0; t < next.values.size(); ++t)
        d2.add(std::abs(next.values[t] - prev.values[t]));
      double cycle = area * d2.value() / m_next;
      if (cycle <= 0.1 * sym_diff) {
        // period-2 cycle: replace by the constraint-preserving average
        for (std::size_t t = 0; t < next.values.size(); ++t)
          next.values[t] = 0.5 * (next.values[t] + w.values[t]);
        next = steiner_symmetrize(next);
        ++rep.oscillation_events;
        m_next = mass(next);
        CompensatedSum d3;
        for (std::size_t t = 0; t < next.values.size(); ++t)
          d3.add(std::abs(next.values[t] - w.values[t]));
        sym_diff = area * d3.value() / m_next;
      }
    }

    double e = field.energy(next);
    rep.trace.push_back({k, e, m.W, m.gamma, m_next, sym_diff});
    if (e < e_prev - 1e-12 * std::abs(e_prev)) ++rep.energy_decreases;
    converged = std::abs(e - e_prev) <= cfg.tol_energy * std::max(std::abs(e), 1e-300) &&
                sym_diff <= cfg.tol_area;

    prev = std::move(w);
    have_prev = true;
    w = std::move(next);
    e_prev = e;
    if (on_checkpoint && cfg.checkpoint_every > 0 && k % cfg.checkpoint_every == 0)
      on_checkpoint(w, &prev, m, k);
  }

  // the converged support may touch the axis row but not the other edges
  for (int j = 0; j < grid.n2; ++j)
    if (w.at(0, j) > 1e-12 || w.at(grid.n1 - 1, j) > 1e-12)
      throw WindowTooSmall("solve: support reached the lateral window edge");
  for (int i = 0; i < grid.n1; ++i)
    if (w.at(i, grid.n2 - 1) > 1e-12)
      throw WindowTooSmall("solve: support reached the top window edge");

  rep.patch = std::move(w);
  rep.multipliers = m;
  rep.energy = e_prev;
  rep.mass = mass(rep.patch);
  rep.impulse = impulse(rep.patch);
  rep.iterations = k;
  rep.termination = converged ? SolveReport::Termination::converged
                    : rep.oscillation_events > 0 ? SolveReport::Termination::oscillation
                                                 : SolveReport::Termination::budget_exhausted;

  long patch_cells = 0, gray_cells = 0;
  for (double v : rep.patch.values) {
    if (v > 0.01) {
      ++patch_cells;
      if (v < 0.99) ++gray_cells;
    }
  }
  rep.binary_fraction =
      patch_cells > 0 ? static_cast<double>(gray_cells) / static_cast<double>(patch_cells) : 0.0;
  rep.pohozaev_residual = pohozaev_residual(rep.patch, rep.multipliers, rep.energy);
  double w_formula = speed_from_patch(rep.patch);
  rep.speed_cross_rel =
      rep.multipliers.W > 0.0 ? std::abs(w_formula - rep.multipliers.W) / rep.multipliers.W : 0.0;
  return rep;
}

std::pair<PatchDensity, Multipliers> rescale(const PatchDensity& w, const Multipliers& m,
                                             double mu_from, double mu_to) {
  if (!(mu_from > 0.0) || !(mu_to > 0.0))
    throw std::invalid_argument("rescale: impulse values must be positive");
  // cbrt is exact on exact cubes >= 1 but can land an ulp low on their
  // reciprocals (cbrt(0.125) = 0.5 - ulp); taking the reciprocal of the
  // enlarging root keeps shrink/enlarge pairs mutually inverse, so
  // power-of-eight impulse ratios transport bitwise in both directions.
  double ratio = mu_to / mu_from;
  double s = ratio >= 1.0 ? std::cbrt(ratio) : 1.0 / std::cbrt(mu_from / mu_to);
  PatchDensity out = w;
  out.grid.h1 = w.grid.h1 * s;
  out.grid.h2 = w.grid.h2 * s;
  return {std::move(out), Multipliers{m.W * s, m.gamma * s * s}};
}

}  // namespace sadovskii
