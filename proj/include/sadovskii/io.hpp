#pragma once

#include <map>
#include <optional>
#include <string>

#include "sadovskii/boundary.hpp"
#include "sadovskii/diagnostics.hpp"
#include "sadovskii/grid.hpp"
#include "sadovskii/solver.hpp"

namespace sadovskii {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Patch file: one JSON text header line
//   {"format-version":1,"n1":...,"n2":...,"h1":...,"h2":...,"l1":...}
// terminated by '\n', then n1*n2 doubles, little endian, row-major with
// x2-major rows. Bitwise round trips.
void write_patch(const std::string& path, const PatchDensity& w);
PatchDensity read_patch(const std::string& path);

// cell dump: header i,j,x1,x2,value
void write_patch_csv(const std::string& path, const PatchDensity& w);

// boundary polyline: header x1,x2; right side bottom-up then mirrored left
// side top-down, closed over the axis. Also usable with rows from the cell
// values alone (csv export path).
void write_boundary_csv(const std::string& path, const BoundaryCurve& boundary);

// trace: header iteration,energy,W,gamma,mass,sym_diff; append=true keeps
// rows with iteration <= from_iteration and drops the rest before adding.
void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace);
void append_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace,
                      int from_iteration);

void write_scaling_csv(const std::string& path, const ScalingStudy& study);

std::string diagnostics_json(const SolveReport& report, const BoundaryCurve& boundary,
                             const ShapeReport* shape, const TouchingReport& touching);
void write_text(const std::string& path, const std::string& content);

// checkpoint: JSON {W,gamma,iteration,has_prev} plus the current iterate at
// <path>.patch and, when present, the previous iterate at <path>.prev (the
// cycle detector's history, required for bit-exact resumes)
void write_checkpoint(const std::string& path, const PatchDensity& w,
                      const PatchDensity* prev, const Multipliers& m, int iteration);
struct Checkpoint {
  PatchDensity patch;
  std::optional<PatchDensity> prev;
  Multipliers multipliers;
  int iteration = 0;
};
Checkpoint read_checkpoint(const std::string& path);

// flat key=value config text; '#' comments and blank lines ignored.
// Duplicate keys and lines without '=' are errors; callers validate names.
std::map<std::string, std::string> parse_config_file(const std::string& path);

}  // namespace sadovskii
