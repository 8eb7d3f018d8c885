#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sadovskii/greens.hpp"
#include "sadovskii/grid.hpp"

namespace sadovskii {

// Lagrange multipliers of the constrained maximization: traveling speed W
// (impulse constraint) and flux constant gamma (mass cap). W > 0 always;
// gamma = 0 whenever the mass cap is slack.
struct Multipliers {
  double W = 0.0;
  double gamma = 0.0;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// multiplier bisection cannot bracket the target impulse or mass
struct BracketFailure : SolverError {
  using SolverError::SolverError;
};
// impulse failed to decrease along a bisection (NaN field or corrupt input)
struct NonMonotoneAnomaly : SolverError {
  using SolverError::SolverError;
};
// converged or shifted support touches the window edge
struct WindowTooSmall : SolverError {
  using SolverError::SolverError;
};

struct SolverConfig {
  double mu = 0.05;                                      // impulse (> 0)
  double nu = 1.0;                                       // mass cap, may be infinity
  int n1 = 128;
  int n2 = 64;
  double window = 0.0;                                   // l1 = l2; 0 -> 4*mu^(1/3)
  double impulse_rel_tol = 1e-8;
  double tol_energy = 1e-9;                              // relative energy increment
  double tol_area = 1e-6;                                // symmetric difference / mass
  int max_iterations = 500;
  enum class Init { half_disc, rectangle, file } init = Init::half_disc;
  std::string init_file;
  std::uint64_t seed = 0;                                // reserved for perturbed starts
  int checkpoint_every = 0;                              // 0 disables
  std::string checkpoint_path;
  bool resume = false;

  double l1() const;                                     // window half-width actually used
};

// Steiner-symmetric near-indicator start with impulse matched to mu at
// machine precision: cells sorted by distance from the origin, filled whole
// until the last, fractional, pair. half_disc uses |x| < (3 mu / 2)^(1/3);
// rectangle uses a square-ish block of the same impulse.
PatchDensity initialize(const SolverConfig& cfg, const HalfPlaneGrid& grid);

// Indicator of { psi - W x2 - gamma > 0 } at cell centers.
// Preconditions: W > 0, gamma >= 0.
PatchDensity level_set_patch(const StreamField& psi, const Multipliers& m);

// Finds (W, gamma) so the level-set patch of psi meets impulse = mu exactly
// (one fractional boundary cell) and mass <= nu, with gamma = 0 when the
// cap is slack and mass pinned to nu when it binds. Impulse is strictly
// non-increasing in W and in gamma; violation raises NonMonotoneAnomaly.
// Raises BracketFailure when no W > 0 reaches the impulse target.
std::pair<Multipliers, PatchDensity> find_multipliers(const StreamField& psi, double mu,
                                                      double nu,
                                                      double impulse_rel_tol = 1e-8);

// One relaxation sweep: field of w, multiplier search, level-set patch with
// fractional matching, Steiner symmetrization. Constraints hold exactly on
// the output; energy is expected not to decrease.
std::pair<PatchDensity, Multipliers> relax_step(const PatchDensity& w, double mu, double nu,
                                                const FieldEvaluator& field,
                                                double impulse_rel_tol = 1e-8);

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double W = 0.0;
  double gamma = 0.0;
  double mass = 0.0;
  double sym_diff = 0.0;  // |w_k - w_{k-1}|_1 / mass
};

struct SolveReport {
  PatchDensity patch;
  Multipliers multipliers;
  double energy = 0.0;
  double mass = 0.0;
  double impulse = 0.0;
  enum class Termination { converged, budget_exhausted, oscillation } termination =
      Termination::converged;
  int iterations = 0;
  int oscillation_events = 0;   // period-2 cycles damped by iterate averaging
  int energy_decreases = 0;     // trace rows where energy dropped beyond rounding
  double binary_fraction = 0.0; // patch cells with value in (0.01, 0.99)
  double pohozaev_residual = 0.0;
  double speed_cross_rel = 0.0;
  std::vector<IterationRecord> trace;
};

// Receives the current iterate, the previous iterate (null on the first
// step), the multipliers and the completed iteration index. The previous
// iterate is loop state: the period-2 cycle detector needs it, so resuming
// bit-exactly requires storing it alongside the patch.
using CheckpointHook =
    std::function<void(const PatchDensity&, const PatchDensity*, const Multipliers&, int)>;

SolveReport solve(const SolverConfig& cfg);
// resume state: last two iterates and the iteration index already completed
SolveReport solve(const SolverConfig& cfg, const CheckpointHook& on_checkpoint,
                  const PatchDensity* resume_patch = nullptr,
                  const PatchDensity* resume_prev = nullptr, int resume_iteration = 0);

// Exact similarity transport of a solution between impulse values:
// s = (mu_to/mu_from)^(1/3), cell values unchanged, grid spacing scaled by
// s, W by s, gamma by s^2 (energy scales by s^4). Impulse ratios that make
// s a power of two transport bitwise, so round trips through them are exact.
std::pair<PatchDensity, Multipliers> rescale(const PatchDensity& w, const Multipliers& m,
                                             double mu_from, double mu_to);

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

}  // namespace sadovskii
