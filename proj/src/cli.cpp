#include "hjb/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hjb/config.hpp"
#include "hjb/errors.hpp"
#include "hjb/grid.hpp"
#include "hjb/harness.hpp"
#include "hjb/solver.hpp"

namespace hjb {
namespace {

using nlohmann::json;

// Shortest round-tripping decimal form; keeps the tables bit-reproducible.
std::string fmt(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}
std::string fmt(int v) { return std::to_string(v); }

using Row = std::vector<std::string>;

struct Sink {
  std::filesystem::path dir;
  bool quiet = false;
  bool dat = false;

  void say(const char* line) const {
    if (!quiet) std::printf("%s\n", line);
  }

  void write_json(const std::string& stem, const json& doc) const {
    std::filesystem::create_directories(dir);
    auto path = dir / (stem + ".json");
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << doc.dump(2) << '\n';
  }

  void write_table(const std::string& stem, const Row& header,
                   const std::vector<Row>& rows) const {
    std::filesystem::create_directories(dir);
    auto csv = dir / (stem + ".csv");
    std::ofstream f(csv);
    if (!f) throw ConfigError("cannot write " + csv.string());
    for (std::size_t k = 0; k < header.size(); ++k)
      f << (k ? "," : "") << header[k];
    f << '\n';
    for (const Row& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) f << (k ? "," : "") << r[k];
      f << '\n';
    }
    if (!dat) return;
    std::ofstream d(dir / (stem + ".dat"));
    d << '#';
    for (const std::string& h : header) d << ' ' << h;
    d << '\n';
    for (const Row& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k)
        d << (k ? " " : "") << (r[k].empty() ? "nan" : r[k]);
      d << '\n';
    }
  }
};

// Flags shared by every subcommand.  Sentinels (empty / negative) mean
// "keep whatever the config file says".
struct Common {
  std::string problem = "manufactured-1d";
  std::string out = ".";
  bool quiet = false;
  bool dat = false;
  std::int64_t seed = -1;
  std::string scheme;
  double theta = -1;

  void attach(CLI::App* cmd, bool with_scheme = true) {
    cmd->add_option("--problem", problem,
                    "builtin problem name or JSON config file")
        ->capture_default_str();
    cmd->add_option("--out", out, "directory for the report files")
        ->capture_default_str();
    cmd->add_flag("--quiet", quiet, "suppress progress output");
    cmd->add_flag("--dat", dat, "also write gnuplot .dat tables");
    cmd->add_option("--seed", seed, "seed recorded in the report");
    if (with_scheme) {
      cmd->add_option("--scheme", scheme, "kd or sl");
      cmd->add_option("--theta", theta, "time weighting in [0, 1]")
          ->check(CLI::Range(0.0, 1.0));
    }
  }

  RunConfig load() const {
    RunConfig rc = load_config(problem);
    if (seed >= 0) rc.seed = static_cast<std::uint64_t>(seed);
    return rc;
  }

  Sink sink() const { return Sink{out, quiet, dat}; }
};

json head(const char* sub, const RunConfig& rc) {
  return {{"schema_version", 1},
          {"subcommand", sub},
          {"problem", rc.problem.name},
          {"seed", rc.seed}};
}

json rungs_json(const std::vector<Rung>& rungs) {
  json arr = json::array();
  for (const Rung& r : rungs)
    arr.push_back({{"nodes", r.nodes},
                   {"dx", r.dx},
                   {"dt", r.dt},
                   {"err_global", r.err_global},
                   {"err_interior", r.err_interior}});
  return arr;
}

json audit_json(const AuditReport& a) {
  return {{"assumption", a.assumption},
          {"sampled_max", a.sampled_max},
          {"sample_count", a.sample_count},
          {"pass", a.pass},
          {"details", json(a.details)}};
}

int verdict(const Sink& out, const char* line, bool pass) {
  std::string buf = std::string(line) + (pass ? " -> PASS" : " -> FAIL");
  out.say(buf.c_str());
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveOpts {
  std::vector<int> nodes;
  double dt = 0, dt_coeff = 0, dt_power = 0;
};

int run_solve(const Common& c, const SolveOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  if (!c.scheme.empty()) rc.solver.scheme = scheme_from_name(c.scheme);
  if (c.theta >= 0) rc.solver.theta = c.theta;
  rc.solver.sl.theta = rc.solver.theta;
  if (!o.nodes.empty()) rc.nodes = o.nodes;
  if (o.dt > 0) rc.dt = o.dt;
  if (o.dt_coeff > 0) rc.dt_coeff = o.dt_coeff;
  if (o.dt_power > 0) rc.dt_power = o.dt_power;

  const ControlProblem& p = rc.problem;
  SpaceTimeGrid g = config_grid(rc);
  std::vector<Row> rows;
  auto track = [&](int level, const std::vector<double>& values) {
    double lo = values[0], hi = values[0];
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    rows.push_back({fmt(level), fmt(g.time(level)), fmt(lo), fmt(hi)});
  };
  SolveResult res = solve(p, g, rc.solver, track);

  Point center{};
  for (int k = 0; k < p.dim; ++k)
    center[k] = 0.5 * (p.lower[k] + p.upper[k]);
  double u_mid = interpolate(res.u, center);
  double u_min = res.u.values[0], u_max = res.u.values[0];
  for (double v : res.u.values) {
    u_min = std::min(u_min, v);
    u_max = std::max(u_max, v);
  }
  json fin{{"u_min", u_min}, {"u_max", u_max}, {"u_mid", u_mid}};
  if (p.has_exact()) {
    double err = 0;
    for (int i = 0; i < g.num_nodes(); ++i)
      err = std::max(err,
                     std::fabs(res.u.values[i] - p.exact(g.horizon(), g.point(i))));
    fin["err_exact"] = err;
  }

  json audits = json::array();
  for (const AuditReport& a : res.diag.audits) audits.push_back(audit_json(a));
  json doc = head("solve", rc);
  doc["scheme"] = scheme_name(rc.solver.scheme);
  doc["theta"] = rc.solver.theta;
  doc["grid"] = {{"nodes", {g.nodes[0], g.nodes[1]}},
                 {"dx", {g.dx[0], g.dx[1]}},
                 {"dt", g.dt},
                 {"steps", g.n_steps}};
  doc["diagnostics"] = {{"policy_sweeps_total", res.diag.policy_sweeps_total},
                        {"policy_sweeps_max", res.diag.policy_sweeps_max},
                        {"linear_solves", res.diag.linear_solves},
                        {"linear_residual_max", res.diag.linear_residual_max},
                        {"howard_monotone", res.diag.howard_monotone},
                        {"sup_observed", res.diag.sup_observed},
                        {"sup_bound", res.diag.sup_bound},
                        {"audits", audits}};
  doc["final"] = fin;
  doc["pass"] = true;
  out.write_json("solve", doc);
  out.write_table("solve", {"level", "t", "u_min", "u_max"}, rows);
  if (out.dat) {
    std::vector<Row> profile;
    for (int i = 0; i < g.num_nodes(); ++i) {
      Point x = g.point(i);
      Row r{fmt(x[0])};
      if (p.dim == 2) r.push_back(fmt(x[1]));
      r.push_back(fmt(res.u.values[i]));
      profile.push_back(std::move(r));
    }
    Row hdr{"x1"};
    if (p.dim == 2) hdr.push_back("x2");
    hdr.push_back("u");
    Sink prof = out;
    prof.dat = true;
    prof.write_table("solution", hdr, profile);
  }
  char line[512];
  std::snprintf(line, sizeof line,
                "[solve] %s %s theta=%g nodes=%d dt=%g levels=%d sup=%g",
                p.name.c_str(), scheme_name(rc.solver.scheme),
                rc.solver.theta, g.nodes[0], g.dt, g.n_steps + 1,
                res.diag.sup_observed);
  return verdict(out, line, true);
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

struct ConvergeOpts {
  std::vector<int> ladder;
  double dt_coeff = 0, dt_power = 0;
  int refine = 0;
};

int run_converge(const Common& c, const ConvergeOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  ConvergenceConfig& cfg = rc.converge;
  if (!c.scheme.empty()) cfg.scheme = scheme_from_name(c.scheme);
  if (c.theta >= 0) cfg.theta = c.theta;
  if (!o.ladder.empty()) cfg.nodes_ladder = o.ladder;
  if (o.dt_coeff > 0) cfg.dt_coeff = o.dt_coeff;
  if (o.dt_power > 0) cfg.dt_power = o.dt_power;
  if (o.refine > 0) cfg.reference_refine = o.refine;

  ConvergenceReport rep = convergence_study(rc.problem, cfg);

  std::vector<Row> rows;
  for (std::size_t i = 0; i < rep.rungs.size(); ++i) {
    const Rung& r = rep.rungs[i];
    std::string order;
    if (i > 0) {
      const Rung& q = rep.rungs[i - 1];
      order = fmt(std::log(q.err_global / r.err_global) /
                  std::log(q.dx / r.dx));
    }
    rows.push_back({fmt(r.dx), fmt(r.dt), fmt(r.err_global),
                    fmt(r.err_interior), order});
    char line[256];
    std::snprintf(line, sizeof line,
                  "  nodes=%-5d dx=%-10.4g dt=%-10.4g err=%.4e interior=%.4e",
                  r.nodes, r.dx, r.dt, r.err_global, r.err_interior);
    out.say(line);
  }
  out.write_table("converge", {"dx", "dt", "err_global", "err_interior", "order"},
                  rows);

  json doc = head("converge", rc);
  doc["scheme"] = rep.scheme_id;
  doc["theta"] = rep.theta;
  doc["rungs"] = rungs_json(rep.rungs);
  doc["fitted_order_global"] = rep.fitted_order_global;
  doc["fitted_order_interior"] = rep.fitted_order_interior;
  doc["required_order"] = rep.required_order;
  doc["order_bounds"] = {{"dt_lower", rep.bounds.dt_lower},
                         {"dx_lower", rep.bounds.dx_lower},
                         {"dt_upper", rep.bounds.dt_upper},
                         {"dx_upper", rep.bounds.dx_upper}};
  doc["monotone"] = rep.monotone;
  doc["pass"] = rep.pass;
  out.write_json("converge", doc);

  char line[512];
  std::snprintf(line, sizeof line,
                "[converge] %s %s theta=%g fitted=%.3f (interior %.3f) "
                "required=%.3f monotone=%d",
                rc.problem.name.c_str(), rep.scheme_id.c_str(), rep.theta,
                rep.fitted_order_global, rep.fitted_order_interior,
                rep.required_order, rep.monotone ? 1 : 0);
  return verdict(out, line, rep.pass);
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

struct ConsistencyOpts {
  std::vector<double> eps;
  int nodes = 0;
  bool smooth = false;
};

int run_consistency(const Common& c, const ConsistencyOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  ConsistencyConfig& cfg = rc.consistency;
  if (!c.scheme.empty()) cfg.scheme = scheme_from_name(c.scheme);
  if (c.theta >= 0) cfg.theta = c.theta;
  if (!o.eps.empty()) cfg.eps_ladder = o.eps;
  if (o.nodes > 0) cfg.nodes = o.nodes;
  if (o.smooth) cfg.smooth_field = true;

  ConsistencyReport rep = consistency_probe(rc.problem, cfg);

  std::vector<Row> rows;
  for (const ConsistencySample& s : rep.samples)
    rows.push_back({fmt(s.eps), fmt(s.dt), fmt(s.measured)});
  out.write_table("consistency", {"eps", "dt", "measured"}, rows);

  json doc = head("consistency", rc);
  doc["scheme"] = scheme_name(cfg.scheme);
  doc["theta"] = cfg.theta;
  doc["nodes"] = cfg.nodes;
  doc["smooth_field"] = cfg.smooth_field;
  doc["samples"] = json::array();
  for (const ConsistencySample& s : rep.samples)
    doc["samples"].push_back(
        {{"eps", s.eps}, {"dt", s.dt}, {"measured", s.measured}});
  doc["coeff"] = {rep.coeff[0], rep.coeff[1], rep.coeff[2]};
  doc["rel_residual"] = rep.rel_residual;
  doc["c1_share"] = rep.c1_share;
  doc["pass"] = rep.pass;
  out.write_json("consistency", doc);

  char line[512];
  std::snprintf(line, sizeof line,
                "[consistency] %s %s theta=%g samples=%zu residual=%.2f%% "
                "c1_share=%.2f%%",
                rc.problem.name.c_str(), scheme_name(cfg.scheme), cfg.theta,
                rep.samples.size(), 100 * rep.rel_residual,
                100 * rep.c1_share);
  return verdict(out, line, rep.pass);
}

// ---------------------------------------------------------------------------
// barrier-audit
// ---------------------------------------------------------------------------

struct BarrierOpts {
  std::vector<int> ladder;
};

int run_barrier(const Common& c, const BarrierOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  BarrierStudyConfig& cfg = rc.barrier;
  if (!c.scheme.empty()) cfg.scheme = scheme_from_name(c.scheme);
  if (c.theta >= 0) cfg.theta = c.theta;
  if (!o.ladder.empty()) cfg.nodes_ladder = o.ladder;

  BarrierStudyReport rep = barrier_audit_study(rc.problem, cfg);

  std::vector<Row> rows;
  for (std::size_t i = 0; i < rep.rungs.size(); ++i) {
    const Rung& r = rep.rungs[i];
    rows.push_back({fmt(r.nodes), fmt(r.dx), fmt(r.dt), fmt(rep.k_per_rung[i]),
                    fmt(rep.mismatch_per_rung[i])});
  }
  out.write_table("barrier-audit", {"nodes", "dx", "dt", "k", "mismatch"},
                  rows);

  json doc = head("barrier-audit", rc);
  doc["scheme"] = scheme_name(cfg.scheme);
  doc["theta"] = cfg.theta;
  doc["audit_a2"] = audit_json(rep.a2);
  doc["audit_a3"] = audit_json(rep.a3);
  doc["rungs"] = rungs_json(rep.rungs);
  doc["k_per_rung"] = rep.k_per_rung;
  doc["mismatch_per_rung"] = rep.mismatch_per_rung;
  doc["k_min"] = rep.k_min;
  doc["k_max"] = rep.k_max;
  doc["pass"] = rep.pass;
  out.write_json("barrier-audit", doc);

  char line[512];
  std::snprintf(line, sizeof line,
                "[barrier-audit] %s K in [%.4g, %.4g] ratio=%.3f a2=%s",
                rc.problem.name.c_str(), rep.k_min, rep.k_max,
                rep.k_min > 0 ? rep.k_max / rep.k_min : 0.0,
                rep.a2.pass ? "ok" : "violated");
  return verdict(out, line, rep.pass);
}

// ---------------------------------------------------------------------------
// switching
// ---------------------------------------------------------------------------

struct SwitchingOpts {
  std::vector<double> costs;
  int nodes = 0;
};

int run_switching(const Common& c, const SwitchingOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  SwitchingStudyConfig& cfg = rc.switching;
  if (!c.scheme.empty()) cfg.base.scheme = scheme_from_name(c.scheme);
  if (c.theta >= 0) {
    cfg.base.theta = c.theta;
    cfg.base.sl.theta = c.theta;
  }
  if (!o.costs.empty()) cfg.cost_ladder = o.costs;
  if (o.nodes > 0) cfg.nodes = o.nodes;

  SwitchingStudyReport rep = switching_study(rc.problem, cfg);

  std::vector<Row> rows;
  for (std::size_t i = 0; i < rep.costs.size(); ++i)
    rows.push_back({fmt(rep.costs[i]), fmt(rep.gaps[i])});
  out.write_table("switching", {"cost", "gap"}, rows);

  json doc = head("switching", rc);
  doc["modes"] = cfg.mode_controls;
  doc["costs"] = rep.costs;
  doc["gaps"] = rep.gaps;
  doc["min_feasibility"] = rep.min_feasibility;
  doc["fitted_decay"] = rep.fitted_decay;
  doc["monotone"] = rep.monotone;
  doc["pass"] = rep.pass;
  out.write_json("switching", doc);

  char line[512];
  std::snprintf(line, sizeof line,
                "[switching] %s modes=%zu decay=%.3f feas=%.2e monotone=%d",
                rc.problem.name.c_str(), cfg.mode_controls.size(),
                rep.fitted_decay, rep.min_feasibility, rep.monotone ? 1 : 0);
  return verdict(out, line, rep.pass);
}

// ---------------------------------------------------------------------------
// dependence
// ---------------------------------------------------------------------------

struct DependenceOpts {
  std::vector<double> deltas;
  std::vector<std::string> fields;
  int nodes = 0;
};

int run_dependence(const Common& c, const DependenceOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  DependenceConfig& cfg = rc.dependence;
  if (!c.scheme.empty()) cfg.base.scheme = scheme_from_name(c.scheme);
  if (c.theta >= 0) {
    cfg.base.theta = c.theta;
    cfg.base.sl.theta = c.theta;
  }
  if (!o.deltas.empty()) cfg.deltas = o.deltas;
  if (o.nodes > 0) cfg.nodes = o.nodes;
  if (!o.fields.empty()) {
    cfg.fields.clear();
    for (const std::string& f : o.fields)
      cfg.fields.push_back(field_from_name(f));
  }

  DependenceReport rep = dependence_probe(rc.problem, cfg);

  std::vector<Row> rows;
  json fields = json::array();
  for (const DependenceFieldResult& f : rep.fields) {
    for (std::size_t i = 0; i < cfg.deltas.size(); ++i)
      rows.push_back({field_name(f.field), fmt(cfg.deltas[i]),
                      fmt(f.diffs[i])});
    fields.push_back({{"field", field_name(f.field)},
                      {"diffs", f.diffs},
                      {"fitted_exponent", f.fitted_exponent},
                      {"required", f.required},
                      {"pass", f.pass}});
    char line[256];
    std::snprintf(line, sizeof line, "  %-8s exponent=%.3f required=%.2f %s",
                  field_name(f.field), f.fitted_exponent, f.required,
                  f.pass ? "ok" : "FAIL");
    out.say(line);
  }
  out.write_table("dependence", {"field", "delta", "diff"}, rows);

  json doc = head("dependence", rc);
  doc["deltas"] = cfg.deltas;
  doc["fields"] = fields;
  doc["pass"] = rep.pass;
  out.write_json("dependence", doc);

  char line[512];
  std::snprintf(line, sizeof line, "[dependence] %s fields=%zu",
                rc.problem.name.c_str(), rep.fields.size());
  return verdict(out, line, rep.pass);
}

// ---------------------------------------------------------------------------
// boundary-layer
// ---------------------------------------------------------------------------

struct LayerOpts {
  double dx = 0, safety = 0;
};

int run_boundary_layer(const Common& c, const LayerOpts& o) {
  RunConfig rc = c.load();
  Sink out = c.sink();
  BoundaryLayerConfig& cfg = rc.boundary_layer;
  if (o.dx > 0) cfg.dx = o.dx;
  if (o.safety > 0) cfg.safety = o.safety;

  BoundaryLayerReport rep = boundary_layer_demo(cfg);

  std::vector<Row> rows;
  for (std::size_t i = 0; i < rep.times.size(); ++i)
    rows.push_back({fmt(static_cast<int>(i)), fmt(rep.times[i]),
                    fmt(rep.u1[i]), fmt(rep.bound[i])});
  out.write_table("boundary-layer", {"level", "t", "u1", "bound"}, rows);

  json doc = head("boundary-layer", rc);
  doc["problem"] = "boundary-layer";  // the demo always runs this builtin
  doc["dx"] = rep.dx;
  doc["dt"] = rep.dt;
  doc["steps"] = rep.steps;
  doc["u1_final"] = rep.u1_final;
  doc["lower_bound"] = rep.bound_final;
  doc["interior_err"] = rep.interior_err;
  doc["u_mid"] = rep.u_mid;
  doc["layer_gap"] = rep.layer_gap;
  doc["min_slack"] = rep.min_slack;
  doc["pass_bound"] = rep.pass_bound;
  doc["pass_quarter"] = rep.pass_quarter;
  doc["pass_interior"] = rep.pass_interior;
  doc["pass"] = rep.pass;
  out.write_json("boundary-layer", doc);

  char line[512];
  std::snprintf(line, sizeof line,
                "[boundary-layer] dx=%g u1=%.4f bound=%.4f interior_err=%.2e "
                "layer_gap=%.4f",
                rep.dx, rep.u1_final, rep.bound_final, rep.interior_err,
                rep.layer_gap);
  return verdict(out, line, rep.pass);
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Monotone schemes for parabolic HJB equations on bounded domains"};
  app.require_subcommand(1);

  Common c_solve, c_conv, c_cons, c_barr, c_swit, c_dep, c_layer;
  SolveOpts solve_o;
  ConvergeOpts conv_o;
  ConsistencyOpts cons_o;
  BarrierOpts barr_o;
  SwitchingOpts swit_o;
  DependenceOpts dep_o;
  LayerOpts layer_o;

  CLI::App* solve = app.add_subcommand("solve", "run one solve and report");
  c_solve.attach(solve);
  solve->add_option("--nodes", solve_o.nodes, "nodes per axis")
      ->delimiter(',');
  solve->add_option("--dt", solve_o.dt, "explicit time step");
  solve->add_option("--dt-coeff", solve_o.dt_coeff, "dt = coeff*dx^power");
  solve->add_option("--dt-power", solve_o.dt_power, "dt = coeff*dx^power");

  CLI::App* conv = app.add_subcommand("converge", "error order ladder");
  c_conv.attach(conv);
  conv->add_option("--ladder", conv_o.ladder, "node counts per rung")
      ->delimiter(',');
  conv->add_option("--dt-coeff", conv_o.dt_coeff, "dt = coeff*dx^power");
  conv->add_option("--dt-power", conv_o.dt_power, "dt = coeff*dx^power");
  conv->add_option("--refine", conv_o.refine,
                   "reference grid factor when no exact solution");

  CLI::App* cons = app.add_subcommand("consistency",
                                      "truncation error vs the error model");
  c_cons.attach(cons);
  cons->add_option("--eps", cons_o.eps, "mollification widths")
      ->delimiter(',');
  cons->add_option("--nodes", cons_o.nodes, "grid nodes");
  cons->add_flag("--smooth", cons_o.smooth, "probe a smooth profile");

  CLI::App* barr = app.add_subcommand("barrier-audit",
                                      "barrier assumptions and constant");
  c_barr.attach(barr);
  barr->add_option("--ladder", barr_o.ladder, "node counts per rung")
      ->delimiter(',');

  CLI::App* swit = app.add_subcommand("switching",
                                      "switching-system approximation gap");
  c_swit.attach(swit);
  swit->add_option("--costs", swit_o.costs, "switching cost ladder")
      ->delimiter(',');
  swit->add_option("--nodes", swit_o.nodes, "grid nodes");

  CLI::App* dep = app.add_subcommand("dependence",
                                     "continuous dependence on coefficients");
  c_dep.attach(dep);
  dep->add_option("--deltas", dep_o.deltas, "perturbation sizes")
      ->delimiter(',');
  dep->add_option("--fields", dep_o.fields,
                  "coefficient fields (sigma drift discount cost)")
      ->delimiter(',');
  dep->add_option("--nodes", dep_o.nodes, "grid nodes");

  CLI::App* layer = app.add_subcommand("boundary-layer",
                                       "degenerate boundary-layer example");
  c_layer.attach(layer, /*with_scheme=*/false);
  layer->add_option("--dx", layer_o.dx, "space step");
  layer->add_option("--safety", layer_o.safety,
                    "dt = safety*16*dx^2, in (0, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return run_solve(c_solve, solve_o);
    if (conv->parsed()) return run_converge(c_conv, conv_o);
    if (cons->parsed()) return run_consistency(c_cons, cons_o);
    if (barr->parsed()) return run_barrier(c_barr, barr_o);
    if (swit->parsed()) return run_switching(c_swit, swit_o);
    if (dep->parsed()) return run_dependence(c_dep, dep_o);
    if (layer->parsed()) return run_boundary_layer(c_layer, layer_o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace hjb
