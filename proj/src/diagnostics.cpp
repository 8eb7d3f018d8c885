#include "sadovskii/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace sadovskii {

namespace {

constexpr double c_1o2pi = 0.15915494309189533577;

struct OccupiedCell {
  double x1, x2, v;
};

std::vector<OccupiedCell> occupied_cells(const PatchDensity& w) {
  std::vector<OccupiedCell> cells;
  cells.reserve(1024);
  const HalfPlaneGrid& g = w.grid;
  for (int j = 0; j < g.n2; ++j)
    for (int i = 0; i < g.n1; ++i)
      if (double v = w.at(i, j); v != 0.0) cells.push_back({g.x1(i), g.x2(j), v});
  return cells;
}

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;  // OLS standard error of the slope
};

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sx += x[t];
    sy += y[t];
    sxx += x[t] * x[t];
    sxy += x[t] * y[t];
  }
  double ssx = n * sxx - sx * sx;
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / ssx;
  if (x.size() > 2) {
    double intercept = (sy - fit.slope * sx) / n;
    double rss = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      double r = y[t] - (intercept + fit.slope * x[t]);
      rss += r * r;
    }
    fit.stderr_ = std::sqrt(rss / (n - 2.0) / (ssx / n));
  }
  return fit;
}

}  // namespace

double pohozaev_residual(const PatchDensity& w, const Multipliers& m, double energy_value) {
  if (!(energy_value > 0.0))
    throw std::invalid_argument("pohozaev residual: energy must be positive");
  double rhs = 0.75 * m.W * impulse(w) + 0.5 * m.gamma * mass(w);
  return std::abs(energy_value - rhs) / energy_value;
}

double speed_from_patch(const PatchDensity& w, int threads) {
  std::vector<OccupiedCell> cells = occupied_cells(w);
  if (cells.empty()) throw std::invalid_argument("speed_from_patch: empty patch");
  double total = mass(w);

  auto chunk_sum = [&cells](std::size_t lo, std::size_t hi) {
    CompensatedSum acc;
    for (std::size_t a = lo; a < hi; ++a) {
      const OccupiedCell& x = cells[a];
      CompensatedSum inner;
      for (const OccupiedCell& y : cells) {
        double d1 = x.x1 - y.x1;
        double s2 = x.x2 + y.x2;
        inner.add(y.v * s2 / (d1 * d1 + s2 * s2));
      }
      acc.add(x.v * inner.value());
    }
    return acc.value();
  };

  threads = std::clamp(threads, 1, 64);
  double sum = 0.0;
  if (threads == 1 || cells.size() < 256) {
    sum = chunk_sum(0, cells.size());
  } else {
    // fixed partition with an ordered reduction keeps the result
    // independent of scheduling
    std::vector<double> partial(threads, 0.0);
    std::vector<std::thread> pool;
    std::size_t step = (cells.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      std::size_t lo = std::min(cells.size(), t * step);
      std::size_t hi = std::min(cells.size(), lo + step);
      pool.emplace_back([&, t, lo, hi] { partial[t] = chunk_sum(lo, hi); });
    }
    for (auto& th : pool) th.join();
    CompensatedSum acc;
    for (double p : partial) acc.add(p);
    sum = acc.value();
  }
  double area = w.grid.cell_area();
  return c_1o2pi * area * area * sum / total;
}

double central_speed_margin(const PatchDensity& w, const Multipliers& m) {
  if (!(m.W > 0.0)) throw std::invalid_argument("central speed margin: W must be positive");
  if (mass(w) == 0.0) throw std::invalid_argument("central speed margin: empty patch");
  return horizontal_velocity_on_axis(w, 0.0) / (2.0 * m.W) - 1.0;
}

TouchingReport touching_report(const PatchDensity& w, const StreamField& psi,
                               const Multipliers& m) {
  const HalfPlaneGrid& g = w.grid;
  if (mass(w) == 0.0) throw std::invalid_argument("touching report: empty patch");
  CompensatedSum first_row;
  for (int i = 0; i < g.n1; ++i) first_row.add(w.at(i, 0));
  TouchingReport rep;
  rep.touching = m.gamma == 0.0 && first_row.value() > 0.0;
  double rho = std::min(g.l1(), g.l2());
  for (int j = 0; j < g.n2; ++j) {
    double x2 = g.x2(j);
    double thr = m.W * x2;
    for (int i = 0; i < g.n1; ++i)
      if (psi.at(i, j) <= thr) {
        double x1 = g.x1(i);
        rho = std::min(rho, std::sqrt(x1 * x1 + x2 * x2));
      }
  }
  rep.clearance = rho;
  return rep;
}

BoundaryCurve boundary_extract(const PatchDensity& w, const StreamField& psi,
                               const Multipliers& m) {
  const HalfPlaneGrid& g = w.grid;
  if (!(m.W > 0.0)) throw std::invalid_argument("boundary extract: W must be positive");
  BoundaryCurve curve;

  int i0 = g.n1 / 2;
  for (int j = 0; j < g.n2; ++j) {
    double row_max = 0.0;
    CompensatedSum row_sum;
    for (int i = 0; i < g.n1; ++i) {
      row_max = std::max(row_max, w.at(i, j));
      row_sum.add(w.at(i, j));
    }
    if (row_max < 1e-9) continue;

    double x2 = g.x2(j);
    double thr = m.W * x2 + m.gamma;
    if (psi.at(i0, j) <= thr) {
      if (row_sum.value() < 1.5) continue;  // fractional dust row
      throw SolverError("boundary extract: occupied row " + std::to_string(j) +
                        " has no positive center margin");
    }
    int ip = -1;
    for (int i = i0 + 1; i < g.n1; ++i)
      if (psi.at(i, j) <= thr) {
        ip = i;
        break;
      }
    if (ip < 0)
      throw SolverError("boundary extract: no crossing inside the window on row " +
                        std::to_string(j));
    double ma = psi.at(ip - 1, j) - thr;
    double mb = psi.at(ip, j) - thr;
    curve.samples.push_back({x2, g.x1(ip - 1) + g.h1 * ma / (ma - mb)});
  }

  // touching abscissa: root of u(a, 0) = W on the axis
  double u0 = horizontal_velocity_on_axis(w, 0.0);
  if (u0 > m.W) {
    double lo = 0.0, hi = -1.0;
    int nprobe = 64;
    for (int k = 1; k <= nprobe; ++k) {
      double x = g.l1() * (1.0 - 1e-9) * k / nprobe;
      if (horizontal_velocity_on_axis(w, x) < m.W) {
        hi = x;
        break;
      }
      lo = x;
    }
    if (hi < 0.0)
      throw SolverError("boundary extract: axis speed stays above W inside the window");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(hi, 1.0); ++it) {
      double mid = 0.5 * (lo + hi);
      (horizontal_velocity_on_axis(w, mid) >= m.W ? lo : hi) = mid;
    }
    curve.touching_abscissa = 0.5 * (lo + hi);
  }
  return curve;
}

double angle_probe(const BoundaryCurve& boundary, int rows) {
  if (rows < 2) throw std::invalid_argument("angle probe: need at least 2 rows");
  std::vector<double> s, l;
  for (const BoundarySample& b : boundary.samples) {
    if (b.l <= 0.0) continue;
    s.push_back(b.s);
    l.push_back(b.l);
    if (static_cast<int>(s.size()) == rows) break;
  }
  if (static_cast<int>(s.size()) < rows)
    throw SolverError("angle probe: fewer boundary samples than requested rows");
  double slope = fit_slope(s, l).slope;
  return std::atan2(1.0, std::abs(slope)) * 180.0 / M_PI;
}

ShapeReport shape_report(const PatchDensity& w, const StreamField& psi, const Multipliers& m,
                         double energy_value) {
  if (m.gamma != 0.0)
    throw SolverError("shape report: requires a touching solution (gamma = 0)");
  const HalfPlaneGrid& g = w.grid;
  BoundaryCurve curve = boundary_extract(w, psi, m);
  if (curve.samples.empty()) throw SolverError("shape report: empty boundary");

  // interpolated top of the patch along the center column
  int i0 = g.n1 / 2;
  auto margin = [&](int j) { return psi.at(i0, j) - m.W * g.x2(j); };
  if (!(margin(0) > 0.0))
    throw SolverError("shape report: patch does not reach the axis at the center");
  int jt = 0;
  while (jt + 1 < g.n2 && margin(jt + 1) > 0.0) ++jt;
  if (jt + 1 >= g.n2) throw SolverError("shape report: patch top reaches the window edge");
  double ma = margin(jt), mb = margin(jt + 1);

  ShapeReport rep;
  rep.max_height = g.x2(jt) + g.h2 * ma / (ma - mb);
  rep.touching_length = 2.0 * curve.touching_abscissa;
  rep.area = mass(w);
  rep.vertical_centroid = impulse(w) / rep.area;
  rep.central_speed = horizontal_velocity_on_axis(w, 0.0);
  rep.W = m.W;
  rep.gamma = m.gamma;
  rep.energy = energy_value;
  double h = rep.max_height;
  rep.touching_length_norm = rep.touching_length / h;
  rep.area_norm = rep.area / (h * h);
  rep.vertical_centroid_norm = rep.vertical_centroid / h;
  // Informational only; coarse grids may expose fewer than 5 boundary rows.
  int usable = 0;
  for (const BoundarySample& b : curve.samples)
    if (b.l > 0.0) ++usable;
  rep.contact_angle_deg = angle_probe(curve, std::min(usable, 5));
  return rep;
}

ScalingStudy scaling_study(const std::vector<double>& mu_values, const SolverConfig& base) {
  if (mu_values.size() < 3) throw SolverError("scaling study needs >= 3 points");
  ScalingStudy study;
  for (double mu : mu_values) {
    SolverConfig cfg = base;
    cfg.mu = mu;
    cfg.window = 0.0;  // auto-sized per mu so all runs share cell counts
    SolveReport rep = solve(cfg);
    if (rep.termination != SolveReport::Termination::converged)
      throw SolverError("scaling study: run at mu = " + std::to_string(mu) +
                        " did not converge");
    if (rep.multipliers.gamma != 0.0)
      throw SolverError("scaling study: run at mu = " + std::to_string(mu) +
                        " hit the mass cap");
    double radius = 0.0;
    const HalfPlaneGrid& g = rep.patch.grid;
    for (int j = 0; j < g.n2; ++j)
      for (int i = 0; i < g.n1; ++i)
        if (rep.patch.at(i, j) > 1e-9) {
          double x1 = g.x1(i), x2 = g.x2(j);
          radius = std::max(radius, std::sqrt(x1 * x1 + x2 * x2));
        }
    study.rows.push_back(
        {mu, rep.mass, rep.multipliers.W, rep.energy, radius, rep.multipliers.gamma});
  }

  std::vector<double> lmu, lmass, lw, le, lr;
  for (const ScalingRow& r : study.rows) {
    lmu.push_back(std::log(r.mu));
    lmass.push_back(std::log(r.mass));
    lw.push_back(std::log(r.W));
    le.push_back(std::log(r.energy));
    lr.push_back(std::log(r.support_radius));
  }
  SlopeFit fm = fit_slope(lmu, lmass), fw = fit_slope(lmu, lw), fe = fit_slope(lmu, le),
           fr = fit_slope(lmu, lr);
  study.slope_mass = fm.slope;
  study.se_mass = fm.stderr_;
  study.slope_W = fw.slope;
  study.se_W = fw.stderr_;
  study.slope_energy = fe.slope;
  study.se_energy = fe.stderr_;
  study.slope_radius = fr.slope;
  study.se_radius = fr.stderr_;
  return study;
}

}  // namespace sadovskii
