#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hjb/harness.hpp"

namespace hjb {

// Everything a CLI run needs, read from one JSON document.  The "problem"
// entry is either a builtin name or an object defining the coefficients as
// expressions in t, x1, x2, alpha (see expr.hpp); the remaining blocks
// override per-study defaults field by field.  Full schema in the README.
struct RunConfig {
  ControlProblem problem;
  std::uint64_t seed = 0;  // echoed into reports; studies are deterministic

  // Grid for plain solves: per-axis node counts plus a time-step rule.  An
  // explicit dt wins; otherwise dt = dt_coeff * max_dx ^ dt_power.  Either
  // way dt is snapped so an integer number of steps lands exactly on T.
  std::vector<int> nodes{65};
  double dt = 0;
  double dt_coeff = 1;
  double dt_power = 1;

  SolverConfig solver;

  ConvergenceConfig converge;
  ConsistencyConfig consistency;
  BarrierStudyConfig barrier;
  SwitchingStudyConfig switching;
  DependenceConfig dependence;
  BoundaryLayerConfig boundary_layer;
};

// Parses a JSON config document.  Throws ConfigError on malformed input.
RunConfig parse_config(const std::string& json_text);

// Reads `arg` as a file when one exists at that path, otherwise treats it
// as a builtin problem name with default settings.
RunConfig load_config(const std::string& arg);

// Builds the solve grid described by cfg.nodes and the time-step rule.
SpaceTimeGrid config_grid(const RunConfig& cfg);

// Name <-> enum helpers shared with the CLI ("kd"/"sl", coefficient field
// names for the dependence study).
SchemeKind scheme_from_name(const std::string& name);
const char* scheme_name(SchemeKind scheme);
PerturbField field_from_name(const std::string& name);
const char* field_name(PerturbField field);

}  // namespace hjb
