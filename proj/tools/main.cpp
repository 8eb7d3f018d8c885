#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sadovskii/diagnostics.hpp"
#include "sadovskii/io.hpp"
#include "sadovskii/solver.hpp"
#include "sadovskii/symmetry.hpp"

namespace fs = std::filesystem;
using namespace sadovskii;

namespace {

struct Options {
  double mu = 0.05;
  bool mu_given = false;
  std::string nu = "1";  // number or "inf"
  int n1 = 128;
  int n2 = 64;
  double window = 0.0;
  double tol_e = 1e-9;
  double tol_a = 1e-6;
  int max_iter = 500;
  std::string init = "halfdisc";  // halfdisc | rectangle | file:<path>
  std::uint64_t seed = 0;
  std::string out = "out";
  int checkpoint_every = 0;
  bool resume = false;
  int threads = 1;
  std::string mu_list = "0.0125,0.025,0.05,0.1";
  std::string patch_path;
  std::string format = "both";  // csv | contour | both
};

double parse_nu(const std::string& s) {
  if (s == "inf" || s == "INF" || s == "unbounded") return kUnbounded;
  return std::stod(s);
}

// config file keys, applied before command-line flags
void apply_config_file(Options& o, const std::string& path) {
  for (const auto& [key, value] : parse_config_file(path)) {
    try {
      if (key == "mu") {
        o.mu = std::stod(value);
        o.mu_given = true;
      }
      else if (key == "nu") o.nu = value;
      else if (key == "n1") o.n1 = std::stoi(value);
      else if (key == "n2") o.n2 = std::stoi(value);
      else if (key == "window") o.window = std::stod(value);
      else if (key == "tol_e") o.tol_e = std::stod(value);
      else if (key == "tol_a") o.tol_a = std::stod(value);
      else if (key == "max_iter") o.max_iter = std::stoi(value);
      else if (key == "init") o.init = value;
      else if (key == "seed") o.seed = std::stoull(value);
      else if (key == "out") o.out = value;
      else if (key == "checkpoint_every") o.checkpoint_every = std::stoi(value);
      else if (key == "resume") o.resume = value == "true" || value == "1";
      else if (key == "threads") o.threads = std::stoi(value);
      else if (key == "mu_list") o.mu_list = value;
      else if (key == "patch") o.patch_path = value;
      else if (key == "format") o.format = value;
      else throw IoError("config file: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw IoError("config file: bad value for key '" + key + "': " + value);
    } catch (const std::out_of_range&) {
      throw IoError("config file: value out of range for key '" + key + "': " + value);
    }
  }
}

SolverConfig solver_config(const Options& o) {
  SolverConfig cfg;
  cfg.mu = o.mu;
  cfg.nu = parse_nu(o.nu);
  cfg.n1 = o.n1;
  cfg.n2 = o.n2;
  cfg.window = o.window;
  cfg.tol_energy = o.tol_e;
  cfg.tol_area = o.tol_a;
  cfg.max_iterations = o.max_iter;
  cfg.seed = o.seed;
  cfg.checkpoint_every = o.checkpoint_every;
  if (o.init == "halfdisc") cfg.init = SolverConfig::Init::half_disc;
  else if (o.init == "rectangle") cfg.init = SolverConfig::Init::rectangle;
  else if (o.init.rfind("file:", 0) == 0) {
    cfg.init = SolverConfig::Init::file;
    cfg.init_file = o.init.substr(5);
  } else {
    throw CLI::ValidationError("--init", "expected halfdisc, rectangle or file:<path>");
  }
  return cfg;
}

void add_grid_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--n1", o.n1, "horizontal cell count (even)")->capture_default_str();
  cmd->add_option("--n2", o.n2, "vertical cell count")->capture_default_str();
  cmd->add_option("--window", o.window,
                  "window half-width and height; 0 picks 4*mu^(1/3)")
      ->capture_default_str();
}

void add_solver_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--mu", o.mu, "impulse constraint")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--nu", o.nu, "mass cap, a number or 'inf'")->capture_default_str();
  add_grid_flags(cmd, o);
  cmd->add_option("--tol-e", o.tol_e, "relative energy increment tolerance")
      ->capture_default_str();
  cmd->add_option("--tol-a", o.tol_a, "symmetric-difference tolerance (fraction of mass)")
      ->capture_default_str();
  cmd->add_option("--max-iter", o.max_iter, "iteration budget")->capture_default_str();
  cmd->add_option("--init", o.init, "start: halfdisc | rectangle | file:<path>")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "reserved for perturbed starts")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads for pairwise diagnostics")
      ->envname("SADOVSKII_THREADS")
      ->capture_default_str();
}

void report_files(const fs::path& dir, const SolveReport& rep, bool resumed,
                  int resume_iteration) {
  FieldEvaluator field(rep.patch.grid);
  StreamField psi = field.fast(rep.patch);
  BoundaryCurve boundary = boundary_extract(rep.patch, psi, rep.multipliers);
  TouchingReport touching = touching_report(rep.patch, psi, rep.multipliers);
  std::optional<ShapeReport> shape;
  if (rep.multipliers.gamma == 0.0)
    shape = shape_report(rep.patch, psi, rep.multipliers, rep.energy);

  write_patch((dir / "patch.bin").string(), rep.patch);
  write_boundary_csv((dir / "boundary.csv").string(), boundary);
  write_text((dir / "diagnostics.json").string(),
             diagnostics_json(rep, boundary, shape ? &*shape : nullptr, touching));
  if (resumed)
    append_trace_csv((dir / "trace.csv").string(), rep.trace, resume_iteration);
  else
    write_trace_csv((dir / "trace.csv").string(), rep.trace);
}

const char* termination_name(SolveReport::Termination t) {
  switch (t) {
    case SolveReport::Termination::converged: return "converged";
    case SolveReport::Termination::budget_exhausted: return "budget exhausted";
    default: return "oscillation";
  }
}

int run_solve(const Options& o) {
  SolverConfig cfg = solver_config(o);
  fs::create_directories(o.out);
  std::string ckpt = (fs::path(o.out) / "checkpoint.json").string();

  std::optional<PatchDensity> start;
  std::optional<PatchDensity> start_prev;
  int resume_iteration = 0;
  if (o.resume) {
    Checkpoint cp = read_checkpoint(ckpt);
    start = std::move(cp.patch);
    start_prev = std::move(cp.prev);
    resume_iteration = cp.iteration;
  } else if (cfg.init == SolverConfig::Init::file) {
    start = read_patch(cfg.init_file);
    validate_density(*start);
  }

  CheckpointHook hook;
  if (cfg.checkpoint_every > 0)
    hook = [&ckpt](const PatchDensity& w, const PatchDensity* prev, const Multipliers& m,
                   int iteration) { write_checkpoint(ckpt, w, prev, m, iteration); };

  SolveReport rep;
  try {
    rep = solve(cfg, hook, start ? &*start : nullptr, start_prev ? &*start_prev : nullptr,
                resume_iteration);
  } catch (const SolverError& e) {
    write_text((fs::path(o.out) / "failure.json").string(),
               std::string("{\"error\":") + nlohmann::json(e.what()).dump() + "}\n");
    throw;
  }
  report_files(o.out, rep, o.resume, resume_iteration);

  std::cout << termination_name(rep.termination) << " after " << rep.iterations
            << " iterations\n"
            << "  energy " << rep.energy << "  W " << rep.multipliers.W << "  gamma "
            << rep.multipliers.gamma << "\n"
            << "  mass " << rep.mass << "  impulse " << rep.impulse << "\n"
            << "  pohozaev residual " << rep.pohozaev_residual << "  speed cross-check "
            << rep.speed_cross_rel << "\n"
            << "  outputs in " << o.out << "\n";
  if (rep.termination != SolveReport::Termination::converged) {
    std::cerr << "solver did not converge\n";
    return 1;
  }
  return 0;
}

int run_study(const Options& o) {
  std::vector<double> mus;
  std::stringstream ss(o.mu_list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) mus.push_back(std::stod(item));

  SolverConfig base = solver_config(o);
  ScalingStudy study = scaling_study(mus, base);
  fs::create_directories(o.out);
  write_scaling_csv((fs::path(o.out) / "scaling.csv").string(), study);

  std::cout << "log-log slopes over mu:\n"
            << "  mass   " << study.slope_mass << " +/- " << study.se_mass
            << "  (2/3 expected)\n"
            << "  W      " << study.slope_W << " +/- " << study.se_W << "  (1/3 expected)\n"
            << "  energy " << study.slope_energy << " +/- " << study.se_energy
            << "  (4/3 expected)\n"
            << "  radius " << study.slope_radius << " +/- " << study.se_radius
            << "  (1/3 expected)\n"
            << "  table in " << (fs::path(o.out) / "scaling.csv").string() << "\n";
  return 0;
}

int run_diagnose(const Options& o) {
  PatchDensity w = read_patch(o.patch_path);
  validate_density(w);
  double mu = impulse(w);
  double nu = parse_nu(o.nu);

  FieldEvaluator field(w.grid);
  StreamField psi = field.fast(w);
  Multipliers m = find_multipliers(psi, mu, nu).first;
  double e = field.energy(w, psi);

  SolveReport rep;
  rep.patch = w;
  rep.multipliers = m;
  rep.energy = e;
  rep.mass = mass(w);
  rep.impulse = mu;
  rep.termination = SolveReport::Termination::converged;
  rep.pohozaev_residual = pohozaev_residual(w, m, e);
  double w_formula = speed_from_patch(w, o.threads);
  rep.speed_cross_rel = std::abs(w_formula - m.W) / m.W;
  long patch_cells = 0, gray = 0;
  for (double v : w.values)
    if (v > 0.01) {
      ++patch_cells;
      if (v < 0.99) ++gray;
    }
  rep.binary_fraction = patch_cells ? double(gray) / double(patch_cells) : 0.0;

  BoundaryCurve boundary = boundary_extract(w, psi, m);
  TouchingReport touching = touching_report(w, psi, m);
  std::optional<ShapeReport> shape;
  if (m.gamma == 0.0) shape = shape_report(w, psi, m, e);

  fs::create_directories(o.out);
  write_text((fs::path(o.out) / "diagnostics.json").string(),
             diagnostics_json(rep, boundary, shape ? &*shape : nullptr, touching));
  write_boundary_csv((fs::path(o.out) / "boundary.csv").string(), boundary);

  double margin = central_speed_margin(w, m);
  double speed_third = 4.0 * e / (3.0 * mu);  // W from the virial identity
  double tri = std::abs(speed_third - m.W) / m.W;
  std::cout << "W " << m.W << "  gamma " << m.gamma << "  energy " << e << "\n"
            << "pohozaev residual " << rep.pohozaev_residual << "\n"
            << "speed cross-check " << rep.speed_cross_rel << "  virial speed "
            << tri << "\n"
            << "central speed margin " << margin << "\n"
            << "touching " << (touching.touching ? "yes" : "no") << "  clearance "
            << touching.clearance << "\n";

  bool ok = rep.pohozaev_residual <= 0.02 && rep.speed_cross_rel <= 0.02 && tri <= 0.02 &&
            margin > 0.0 && rep.binary_fraction <= 0.03 &&
            touching.touching == (m.gamma == 0.0);
  if (!ok) {
    std::cerr << "diagnose: acceptance assertions failed\n";
    return 2;
  }
  return 0;
}

int run_export(const Options& o) {
  PatchDensity w = read_patch(o.patch_path);
  bool want_csv = o.format == "csv" || o.format == "both";
  bool want_contour = o.format == "contour" || o.format == "both";
  if (!want_csv && !want_contour)
    throw CLI::ValidationError("--format", "expected csv, contour or both");

  fs::create_directories(o.out);
  if (want_csv) {
    fs::path out = fs::path(o.out) / "patch.csv";
    write_patch_csv(out.string(), w);
    std::cout << "wrote " << out.string() << "\n";
  }
  if (want_contour) {
    // row half-widths from the cell values alone: Steiner-symmetric rows
    // occupy an interval, so half-width = row sum * h1 / 2
    BoundaryCurve curve;
    const HalfPlaneGrid& g = w.grid;
    for (int j = 0; j < g.n2; ++j) {
      CompensatedSum row;
      for (int i = 0; i < g.n1; ++i) row.add(w.at(i, j));
      double sum = row.value();
      if (sum > 0.0) curve.samples.push_back({g.x2(j), 0.5 * sum * g.h1});
    }
    if (!curve.samples.empty()) curve.touching_abscissa = curve.samples.front().l;
    fs::path out = fs::path(o.out) / "contour.csv";
    write_boundary_csv(out.string(), curve);
    std::cout << "wrote " << out.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;

  // the config file seeds the defaults, command-line flags win
  try {
    for (int a = 1; a < argc; ++a) {
      std::string arg = argv[a];
      if (arg == "--config" && a + 1 < argc) apply_config_file(o, argv[a + 1]);
      else if (arg.rfind("--config=", 0) == 0) apply_config_file(o, arg.substr(9));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{
      "Vortex-pair energy maximizer on the half-plane: computes the Sadovskii\n"
      "touching dipole as the kinetic-energy maximizer under an impulse\n"
      "constraint, with scaling studies and shape diagnostics."};
  app.require_subcommand(1);
  std::string config_dummy;
  app.add_option("--config", config_dummy, "flat key=value config file");

  CLI::App* solve_cmd = app.add_subcommand("solve", "run the level-set relaxation");
  add_solver_flags(solve_cmd, o);
  solve_cmd->add_option("--out", o.out, "output directory")
      ->envname("SADOVSKII_OUT")
      ->capture_default_str();
  solve_cmd->add_option("--checkpoint-every", o.checkpoint_every,
                        "write a checkpoint every k iterations (0 = off)")
      ->capture_default_str();
  solve_cmd->add_flag("--resume", o.resume, "continue from <out>/checkpoint.json")
      ->excludes(solve_cmd->get_option("--init"));

  CLI::App* study_cmd =
      app.add_subcommand("study-scaling", "solve along a mu ladder and fit power laws");
  add_solver_flags(study_cmd, o);
  study_cmd->add_option("--mu-list", o.mu_list, "comma-separated impulses")
      ->capture_default_str();
  study_cmd->add_option("--out", o.out, "output directory")
      ->envname("SADOVSKII_OUT")
      ->capture_default_str();

  CLI::App* diag_cmd =
      app.add_subcommand("diagnose", "recompute multipliers and identities for a stored patch");
  diag_cmd->add_option("--patch", o.patch_path, "patch file")->required();
  diag_cmd->add_option("--nu", o.nu, "mass cap used for the multiplier recovery")
      ->capture_default_str();
  diag_cmd->add_option("--threads", o.threads, "worker threads for pairwise diagnostics")
      ->envname("SADOVSKII_THREADS")
      ->capture_default_str();
  diag_cmd->add_option("--out", o.out, "output directory")
      ->envname("SADOVSKII_OUT")
      ->capture_default_str();

  CLI::App* export_cmd = app.add_subcommand("export", "dump a stored patch for plotting");
  export_cmd->add_option("--patch", o.patch_path, "patch file")->required();
  export_cmd->add_option("--format", o.format, "csv | contour | both")
      ->capture_default_str();
  export_cmd->add_option("--out", o.out, "output file or directory")
      ->envname("SADOVSKII_OUT")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (app.got_subcommand(solve_cmd) && solve_cmd->count("--mu") == 0 && !o.mu_given) {
    std::cerr << "error: solve requires --mu (or mu in the config file)\n";
    return 2;
  }

  try {
    if (app.got_subcommand(solve_cmd)) return run_solve(o);
    if (app.got_subcommand(study_cmd)) return run_study(o);
    if (app.got_subcommand(diag_cmd)) return run_diagnose(o);
    return run_export(o);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
