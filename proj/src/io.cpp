#include "sadovskii/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sadovskii {

namespace {

using nlohmann::json;

void byteswap_doubles(std::vector<double>& v) {
  for (double& d : v) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    u = __builtin_bswap64(u);
    std::memcpy(&d, &u, 8);
  }
}

// values are stored little endian on disk
void to_disk_order(std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::big) byteswap_doubles(v);
}

std::string format_double(double x) {
  return json(x).dump();  // shortest round-trip representation
}

}  // namespace

void write_patch(const std::string& path, const PatchDensity& w) {
  json header;
  header["format-version"] = 1;
  header["n1"] = w.grid.n1;
  header["n2"] = w.grid.n2;
  header["h1"] = w.grid.h1;
  header["h2"] = w.grid.h2;
  header["l1"] = w.grid.l1();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << header.dump() << '\n';
  std::vector<double> vals = w.values;
  to_disk_order(vals);
  f.write(reinterpret_cast<const char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(double)));
  if (!f) throw IoError("write failed: " + path);
}

PatchDensity read_patch(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("missing header line: " + path);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError("bad patch header in " + path + ": " + e.what());
  }
  for (const char* key : {"format-version", "n1", "n2", "h1", "h2", "l1"})
    if (!header.contains(key)) throw IoError(std::string("patch header missing ") + key);
  if (header["format-version"].get<int>() != 1)
    throw IoError("unsupported patch format version in " + path);

  HalfPlaneGrid g;
  g.n1 = header["n1"].get<int>();
  g.n2 = header["n2"].get<int>();
  g.h1 = header["h1"].get<double>();
  g.h2 = header["h2"].get<double>();
  if (g.n1 < 2 || g.n1 % 2 != 0 || g.n2 < 1 || !(g.h1 > 0.0) || !(g.h2 > 0.0))
    throw IoError("patch header describes an invalid grid: " + path);
  double l1 = header["l1"].get<double>();
  if (std::abs(l1 - g.l1()) > 1e-12 * std::max(1.0, g.l1()))
    throw IoError("patch header l1 inconsistent with n1*h1/2: " + path);

  PatchDensity w;
  w.grid = g;
  w.values.assign(g.cell_count(), 0.0);
  f.read(reinterpret_cast<char*>(w.values.data()),
         static_cast<std::streamsize>(w.values.size() * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(w.values.size() * sizeof(double)))
    throw IoError("patch data truncated: " + path);
  char extra;
  if (f.read(&extra, 1); f.gcount() != 0) throw IoError("trailing bytes after patch data: " + path);
  to_disk_order(w.values);
  for (double v : w.values)
    if (!std::isfinite(v)) throw IoError("patch data contains non-finite values: " + path);
  return w;
}

void write_patch_csv(const std::string& path, const PatchDensity& w) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "i,j,x1,x2,value\n";
  const HalfPlaneGrid& g = w.grid;
  for (int j = 0; j < g.n2; ++j)
    for (int i = 0; i < g.n1; ++i)
      f << i << ',' << j << ',' << format_double(g.x1(i)) << ',' << format_double(g.x2(j))
        << ',' << format_double(w.at(i, j)) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

void write_boundary_csv(const std::string& path, const BoundaryCurve& boundary) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "x1,x2\n";
  if (boundary.touching_abscissa > 0.0)
    f << format_double(boundary.touching_abscissa) << ",0\n";
  for (const BoundarySample& b : boundary.samples)
    f << format_double(b.l) << ',' << format_double(b.s) << '\n';
  for (auto it = boundary.samples.rbegin(); it != boundary.samples.rend(); ++it)
    f << format_double(-it->l) << ',' << format_double(it->s) << '\n';
  if (boundary.touching_abscissa > 0.0)
    f << format_double(-boundary.touching_abscissa) << ",0\n";
  if (!f) throw IoError("write failed: " + path);
}

namespace {

void write_trace_rows(std::ofstream& f, const std::vector<IterationRecord>& trace) {
  for (const IterationRecord& r : trace)
    f << r.iteration << ',' << format_double(r.energy) << ',' << format_double(r.W) << ','
      << format_double(r.gamma) << ',' << format_double(r.mass) << ','
      << format_double(r.sym_diff) << '\n';
}

}  // namespace

void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "iteration,energy,W,gamma,mass,sym_diff\n";
  write_trace_rows(f, trace);
  if (!f) throw IoError("write failed: " + path);
}

void append_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace,
                      int from_iteration) {
  std::vector<std::string> kept;
  {
    std::ifstream f(path);
    if (!f) throw IoError("cannot resume trace, missing file: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "iteration,energy,W,gamma,mass,sym_diff")
      throw IoError("cannot resume trace, unexpected header: " + path);
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      int iter = std::atoi(line.c_str());
      if (iter <= from_iteration) kept.push_back(line);
    }
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "iteration,energy,W,gamma,mass,sym_diff\n";
  for (const std::string& line : kept) f << line << '\n';
  write_trace_rows(f, trace);
  if (!f) throw IoError("write failed: " + path);
}

void write_scaling_csv(const std::string& path, const ScalingStudy& study) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "mu,mass,W,energy,support_radius,gamma\n";
  for (const ScalingRow& r : study.rows)
    f << format_double(r.mu) << ',' << format_double(r.mass) << ',' << format_double(r.W)
      << ',' << format_double(r.energy) << ',' << format_double(r.support_radius) << ','
      << format_double(r.gamma) << '\n';
  f << "# slopes: mass " << format_double(study.slope_mass) << " +/- "
    << format_double(study.se_mass) << ", W " << format_double(study.slope_W) << " +/- "
    << format_double(study.se_W) << ", energy " << format_double(study.slope_energy)
    << " +/- " << format_double(study.se_energy) << ", radius "
    << format_double(study.slope_radius) << " +/- " << format_double(study.se_radius) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

std::string diagnostics_json(const SolveReport& report, const BoundaryCurve& boundary,
                             const ShapeReport* shape, const TouchingReport& touching) {
  json d;
  d["energy"] = report.energy;
  d["W"] = report.multipliers.W;
  d["gamma"] = report.multipliers.gamma;
  d["mass"] = report.mass;
  d["impulse"] = report.impulse;
  d["iterations"] = report.iterations;
  switch (report.termination) {
    case SolveReport::Termination::converged: d["termination"] = "converged"; break;
    case SolveReport::Termination::budget_exhausted: d["termination"] = "budget_exhausted"; break;
    case SolveReport::Termination::oscillation: d["termination"] = "oscillation"; break;
  }
  d["binary_fraction"] = report.binary_fraction;
  d["pohozaev_residual"] = report.pohozaev_residual;
  d["speed_cross_rel"] = report.speed_cross_rel;
  d["touching"] = {{"verdict", touching.touching}, {"clearance", touching.clearance}};
  d["boundary"] = {{"rows", boundary.samples.size()},
                   {"touching_abscissa", boundary.touching_abscissa}};
  if (shape) {
    d["shape"] = {{"max_height", shape->max_height},
                  {"touching_length", shape->touching_length},
                  {"area", shape->area},
                  {"vertical_centroid", shape->vertical_centroid},
                  {"central_speed", shape->central_speed},
                  {"touching_length_norm", shape->touching_length_norm},
                  {"area_norm", shape->area_norm},
                  {"vertical_centroid_norm", shape->vertical_centroid_norm},
                  {"contact_angle_deg", shape->contact_angle_deg}};
  } else {
    d["shape"] = nullptr;
  }
  return d.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

void write_checkpoint(const std::string& path, const PatchDensity& w,
                      const PatchDensity* prev, const Multipliers& m, int iteration) {
  write_patch(path + ".patch", w);
  if (prev) write_patch(path + ".prev", *prev);
  json c;
  c["W"] = m.W;
  c["gamma"] = m.gamma;
  c["iteration"] = iteration;
  c["has_prev"] = prev != nullptr;
  write_text(path, c.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  json c;
  try {
    c = json::parse(f);
  } catch (const json::exception& e) {
    throw IoError("bad checkpoint JSON in " + path + ": " + e.what());
  }
  Checkpoint cp;
  cp.multipliers.W = c.at("W").get<double>();
  cp.multipliers.gamma = c.at("gamma").get<double>();
  cp.iteration = c.at("iteration").get<int>();
  cp.patch = read_patch(path + ".patch");
  if (c.value("has_prev", false)) cp.prev = read_patch(path + ".prev");
  return cp;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw IoError("config " + path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw IoError("config " + path + ":" + std::to_string(lineno) + ": empty key");
    if (kv.count(key))
      throw IoError("config " + path + ":" + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = value;
  }
  return kv;
}

}  // namespace sadovskii
