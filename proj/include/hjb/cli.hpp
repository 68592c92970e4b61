#pragma once

namespace hjb {

// Command-line entry point.  Subcommands: solve, converge, consistency,
// barrier-audit, switching, dependence, boundary-layer.  Each reads a JSON
// config file or a builtin problem name, writes <out>/<subcommand>.json and
// .csv (plus gnuplot .dat with --dat) and returns 0 when every pass flag in
// the report is true, 1 on numerical failure, 2 on bad usage or config.
int cli_main(int argc, char** argv);

}  // namespace hjb
