#include "hjb/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "hjb/errors.hpp"
#include "hjb/expr.hpp"
#include "json.hpp"

namespace hjb {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) { known = true; break; }
    if (!known) fail(where, "unknown key \"" + item.key() + "\"");
  }
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

double get_number(const json& j, const char* key, double fallback) {
  return j.contains(key) ? as_number(j.at(key), key) : fallback;
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

int get_int(const json& j, const char* key, int fallback) {
  return j.contains(key) ? as_int(j.at(key), key) : fallback;
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(key, "expected true/false");
  return v.get<bool>();
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    fail(where, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (const json& v : j) out.push_back(as_number(v, where));
  return out;
}

std::vector<int> int_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    fail(where, "expected a nonempty array of integers");
  std::vector<int> out;
  for (const json& v : j) out.push_back(as_int(v, where));
  return out;
}

Expr parse_expr(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected an expression string");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const ConfigError& e) {
    fail(where, e.what());
  }
}

// A bare string stands in for a one-entry list.
std::vector<Expr> expr_list(const json& j, int count, const std::string& where) {
  std::vector<Expr> out;
  if (j.is_string() && count == 1) {
    out.push_back(parse_expr(j, where));
    return out;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != count)
    fail(where, "expected " + std::to_string(count) + " expression strings");
  for (const json& v : j) out.push_back(parse_expr(v, where));
  return out;
}

// sigma is dim x P: a string (1x1), a flat array of P columns when dim = 1,
// or an array of dim rows of equal length.  Returned column-major, the
// layout the sigma evaluator writes.
std::vector<Expr> sigma_exprs(const json& j, int dim, int* cols) {
  if (j.is_string()) {
    if (dim != 1) fail("sigma", "a 2d problem needs an array of rows");
    *cols = 1;
    return {parse_expr(j, "sigma")};
  }
  if (!j.is_array() || j.empty()) fail("sigma", "expected expression rows");
  if (j.front().is_string()) {
    if (dim != 1) fail("sigma", "a 2d problem needs an array of rows");
    *cols = static_cast<int>(j.size());
    std::vector<Expr> flat;
    for (const json& v : j) flat.push_back(parse_expr(v, "sigma"));
    return flat;
  }
  if (static_cast<int>(j.size()) != dim)
    fail("sigma", "expected " + std::to_string(dim) + " rows");
  int p = -1;
  std::vector<std::vector<Expr>> rows;
  for (const json& r : j) {
    if (!r.is_array() || r.empty()) fail("sigma", "rows must be arrays");
    if (p < 0) p = static_cast<int>(r.size());
    if (static_cast<int>(r.size()) != p) fail("sigma", "ragged rows");
    std::vector<Expr> row;
    for (const json& v : r) row.push_back(parse_expr(v, "sigma"));
    rows.push_back(std::move(row));
  }
  std::vector<Expr> flat(static_cast<std::size_t>(dim) * p);
  for (int c = 0; c < p; ++c)
    for (int r = 0; r < dim; ++r) flat[c * dim + r] = rows[r][c];
  *cols = p;
  return flat;
}

ControlProblem expression_problem(const json& j) {
  check_keys(j,
             {"name", "dim", "horizon", "domain", "controls", "sigma",
              "drift", "discount", "cost", "initial", "boundary", "barrier",
              "exact"},
             "problem");
  ControlProblem p;
  p.name = j.value("name", std::string("custom"));
  p.dim = get_int(j, "dim", 1);
  if (p.dim != 1 && p.dim != 2) fail("dim", "must be 1 or 2");
  p.horizon = get_number(j, "horizon", 1.0);
  if (!(p.horizon > 0)) fail("horizon", "must be positive");

  p.lower = {0, 0};
  p.upper = {1, 1};
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    if (!d.is_object() || !d.contains("lower") || !d.contains("upper"))
      fail("domain", "expected {\"lower\": [...], \"upper\": [...]}");
    check_keys(d, {"lower", "upper"}, "domain");
    auto lo = number_list(d.at("lower"), "domain.lower");
    auto up = number_list(d.at("upper"), "domain.upper");
    if (static_cast<int>(lo.size()) != p.dim ||
        static_cast<int>(up.size()) != p.dim)
      fail("domain", "extent arrays must have dim entries");
    for (int k = 0; k < p.dim; ++k) {
      if (!(lo[k] < up[k])) fail("domain", "lower must be below upper");
      p.lower[k] = lo[k];
      p.upper[k] = up[k];
    }
  }

  if (j.contains("controls")) {
    p.controls = number_list(j.at("controls"), "controls");
  }

  const int dim = p.dim;
  const std::vector<double> labels = p.controls;

  int cols = 1;
  std::vector<Expr> sig;
  if (j.contains("sigma")) {
    sig = sigma_exprs(j.at("sigma"), dim, &cols);
  } else {
    sig.assign(dim, Expr::parse("0"));
  }
  p.sigma_cols = cols;
  p.sigma = [sig, dim, cols, labels](int ctrl, double t, const Point& x,
                                     double* out) {
    ExprEnv env{t, x[0], x[1], labels[ctrl]};
    for (int k = 0; k < dim * cols; ++k) out[k] = sig[k].eval(env);
  };

  std::vector<Expr> dft;
  if (j.contains("drift")) {
    dft = expr_list(j.at("drift"), dim, "drift");
  } else {
    dft.assign(dim, Expr::parse("0"));
  }
  p.drift = [dft, dim, labels](int ctrl, double t, const Point& x,
                               double* out) {
    ExprEnv env{t, x[0], x[1], labels[ctrl]};
    for (int k = 0; k < dim; ++k) out[k] = dft[k].eval(env);
  };

  Expr disc = j.contains("discount") ? parse_expr(j.at("discount"), "discount")
                                     : Expr::parse("0");
  p.discount = [disc, labels](int ctrl, double t, const Point& x) {
    return disc.eval(ExprEnv{t, x[0], x[1], labels[ctrl]});
  };

  Expr cost = j.contains("cost") ? parse_expr(j.at("cost"), "cost")
                                 : Expr::parse("0");
  p.running_cost = [cost, labels](int ctrl, double t, const Point& x) {
    return cost.eval(ExprEnv{t, x[0], x[1], labels[ctrl]});
  };

  if (!j.contains("initial")) fail("problem", "missing \"initial\"");
  Expr psi0 = parse_expr(j.at("initial"), "initial");
  p.psi0 = [psi0](const Point& x) {
    return psi0.eval(ExprEnv{0, x[0], x[1], 0});
  };

  Expr psi1 = j.contains("boundary") ? parse_expr(j.at("boundary"), "boundary")
                                     : Expr::parse("0");
  p.psi1 = [psi1](double t, const Point& x) {
    return psi1.eval(ExprEnv{t, x[0], x[1], 0});
  };

  if (j.contains("barrier")) {
    const json& b = j.at("barrier");
    if (!b.is_object() || !b.contains("value"))
      fail("barrier", "expected {\"value\": ..., \"dt\", \"grad\", \"hess\"}");
    check_keys(b, {"value", "dt", "grad", "hess"}, "barrier");
    Expr val = parse_expr(b.at("value"), "barrier.value");
    Expr vdt = b.contains("dt") ? parse_expr(b.at("dt"), "barrier.dt")
                                : Expr::parse("0");
    std::vector<Expr> grad =
        b.contains("grad") ? expr_list(b.at("grad"), dim, "barrier.grad")
                           : std::vector<Expr>(dim, Expr::parse("0"));
    std::vector<Expr> hess =
        b.contains("hess")
            ? expr_list(b.at("hess"), dim * dim, "barrier.hess")
            : std::vector<Expr>(static_cast<std::size_t>(dim) * dim,
                                Expr::parse("0"));
    p.barrier = [val, vdt, grad, hess, dim](double t, const Point& x) {
      ExprEnv env{t, x[0], x[1], 0};
      BarrierEval out;
      out.value = val.eval(env);
      out.time_deriv = vdt.eval(env);
      for (int k = 0; k < dim; ++k) out.grad[k] = grad[k].eval(env);
      for (int k = 0; k < dim * dim; ++k) out.hess[k] = hess[k].eval(env);
      return out;
    };
  }

  if (j.contains("exact")) {
    Expr ex = parse_expr(j.at("exact"), "exact");
    p.exact = [ex](double t, const Point& x) {
      return ex.eval(ExprEnv{t, x[0], x[1], 0});
    };
  }
  return p;
}

ControlProblem parse_problem(const json& j) {
  if (j.is_string()) return builtin_problem(j.get<std::string>());
  if (j.is_object()) return expression_problem(j);
  fail("problem", "expected a builtin name or a definition object");
}

void parse_solver(const json& j, SolverConfig& s) {
  check_keys(j,
             {"scheme", "theta", "policy_tol", "policy_max_iters",
              "linear_tol", "linear_max_iters", "positive_type", "sup_bound",
              "audits", "stencil_step", "cfl_constant"},
             "solver");
  if (j.contains("scheme")) {
    const json& v = j.at("scheme");
    if (!v.is_string()) fail("solver.scheme", "expected a string");
    s.scheme = scheme_from_name(v.get<std::string>());
  }
  s.theta = get_number(j, "theta", s.theta);
  if (s.theta < 0 || s.theta > 1) fail("theta", "must lie in [0, 1]");
  s.policy_tol = get_number(j, "policy_tol", s.policy_tol);
  s.policy_max_iters = get_int(j, "policy_max_iters", s.policy_max_iters);
  s.linear_tol = get_number(j, "linear_tol", s.linear_tol);
  s.linear_max_iters = get_int(j, "linear_max_iters", s.linear_max_iters);
  s.require_positive_type =
      get_bool(j, "positive_type", s.require_positive_type);
  s.check_sup_bound = get_bool(j, "sup_bound", s.check_sup_bound);
  s.run_audits = get_bool(j, "audits", s.run_audits);
  s.sl.stencil_step = get_number(j, "stencil_step", s.sl.stencil_step);
  s.sl.cfl_constant = get_number(j, "cfl_constant", s.sl.cfl_constant);
  s.sl.theta = s.theta;
}

SchemeKind scheme_key(const json& j, SchemeKind fallback,
                      const std::string& where) {
  if (!j.contains("scheme")) return fallback;
  const json& v = j.at("scheme");
  if (!v.is_string()) fail(where + ".scheme", "expected a string");
  return scheme_from_name(v.get<std::string>());
}

void parse_converge(const json& j, ConvergenceConfig& c) {
  check_keys(j,
             {"scheme", "theta", "nodes", "dt_coeff", "dt_power",
              "reference_refine", "interior_margin", "order_tol",
              "monotone_factor"},
             "converge");
  c.scheme = scheme_key(j, c.scheme, "converge");
  c.theta = get_number(j, "theta", c.theta);
  if (j.contains("nodes")) c.nodes_ladder = int_list(j.at("nodes"), "nodes");
  c.dt_coeff = get_number(j, "dt_coeff", c.dt_coeff);
  c.dt_power = get_number(j, "dt_power", c.dt_power);
  c.reference_refine = get_int(j, "reference_refine", c.reference_refine);
  c.interior_margin = get_number(j, "interior_margin", c.interior_margin);
  c.order_tol = get_number(j, "order_tol", c.order_tol);
  c.monotone_factor = get_number(j, "monotone_factor", c.monotone_factor);
}

void parse_consistency(const json& j, ConsistencyConfig& c) {
  check_keys(j,
             {"scheme", "theta", "eps", "dt_factors", "nodes", "quadrature",
              "fit_tol", "smooth_field", "x0_rel", "t0_rel"},
             "consistency");
  c.scheme = scheme_key(j, c.scheme, "consistency");
  c.theta = get_number(j, "theta", c.theta);
  if (j.contains("eps")) c.eps_ladder = number_list(j.at("eps"), "eps");
  if (j.contains("dt_factors"))
    c.dt_factors = number_list(j.at("dt_factors"), "dt_factors");
  c.nodes = get_int(j, "nodes", c.nodes);
  c.quadrature = get_int(j, "quadrature", c.quadrature);
  c.fit_tol = get_number(j, "fit_tol", c.fit_tol);
  c.smooth_field = get_bool(j, "smooth_field", c.smooth_field);
  c.x0_rel = get_number(j, "x0_rel", c.x0_rel);
  c.t0_rel = get_number(j, "t0_rel", c.t0_rel);
}

void parse_barrier(const json& j, BarrierStudyConfig& c) {
  check_keys(j,
             {"scheme", "theta", "nodes", "dt_coeff", "dt_power",
              "zeta_floor"},
             "barrier-audit");
  c.scheme = scheme_key(j, c.scheme, "barrier-audit");
  c.theta = get_number(j, "theta", c.theta);
  if (j.contains("nodes")) c.nodes_ladder = int_list(j.at("nodes"), "nodes");
  c.dt_coeff = get_number(j, "dt_coeff", c.dt_coeff);
  c.dt_power = get_number(j, "dt_power", c.dt_power);
  c.zeta_floor_rel = get_number(j, "zeta_floor", c.zeta_floor_rel);
}

void parse_switching(const json& j, SwitchingStudyConfig& c,
                     int num_controls) {
  check_keys(j, {"modes", "costs", "nodes", "dt_coeff", "dt_power"},
             "switching");
  if (j.contains("modes")) {
    const json& m = j.at("modes");
    if (!m.is_array() || m.empty())
      fail("switching.modes", "expected an array of control-index lists");
    c.mode_controls.clear();
    for (const json& mode : m) {
      auto idx = int_list(mode, "switching.modes");
      for (int i : idx)
        if (i < 0 || i >= num_controls)
          fail("switching.modes", "control index out of range");
      c.mode_controls.push_back(idx);
    }
  }
  if (j.contains("costs")) c.cost_ladder = number_list(j.at("costs"), "costs");
  c.nodes = get_int(j, "nodes", c.nodes);
  c.dt_coeff = get_number(j, "dt_coeff", c.dt_coeff);
  c.dt_power = get_number(j, "dt_power", c.dt_power);
}

void parse_dependence(const json& j, DependenceConfig& c) {
  check_keys(j, {"nodes", "dt_coeff", "dt_power", "deltas", "fields"},
             "dependence");
  c.nodes = get_int(j, "nodes", c.nodes);
  c.dt_coeff = get_number(j, "dt_coeff", c.dt_coeff);
  c.dt_power = get_number(j, "dt_power", c.dt_power);
  if (j.contains("deltas")) c.deltas = number_list(j.at("deltas"), "deltas");
  if (j.contains("fields")) {
    const json& f = j.at("fields");
    if (!f.is_array() || f.empty())
      fail("dependence.fields", "expected an array of field names");
    c.fields.clear();
    for (const json& v : f) {
      if (!v.is_string()) fail("dependence.fields", "expected strings");
      c.fields.push_back(field_from_name(v.get<std::string>()));
    }
  }
}

void parse_boundary_layer(const json& j, BoundaryLayerConfig& c) {
  check_keys(j, {"dx", "safety"}, "boundary-layer");
  c.dx = get_number(j, "dx", c.dx);
  c.safety = get_number(j, "safety", c.safety);
}

// Copies the solver block into every study and fills ladder/mode defaults
// that depend on the problem.
void seed_defaults(RunConfig& rc) {
  rc.converge.scheme = rc.solver.scheme;
  rc.converge.theta = rc.solver.theta;
  rc.converge.base = rc.solver;
  if (rc.converge.nodes_ladder.empty())
    rc.converge.nodes_ladder = {17, 33, 65, 129};
  rc.consistency.scheme = rc.solver.scheme;
  rc.consistency.theta = rc.solver.theta;
  rc.barrier.scheme = rc.solver.scheme;
  rc.barrier.theta = rc.solver.theta;
  rc.barrier.base = rc.solver;
  rc.switching.base = rc.solver;
  if (rc.switching.mode_controls.empty())
    for (int i = 0; i < rc.problem.num_controls(); ++i)
      rc.switching.mode_controls.push_back({i});
  rc.dependence.base = rc.solver;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(doc,
             {"problem", "seed", "grid", "solver", "converge", "consistency",
              "barrier-audit", "switching", "dependence", "boundary-layer"},
             "config");
  if (!doc.contains("problem"))
    throw ConfigError("config: missing \"problem\"");

  RunConfig rc;
  rc.problem = parse_problem(doc.at("problem"));
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
      fail("seed", "expected a nonnegative integer");
    rc.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (!g.is_object()) fail("grid", "expected an object");
    check_keys(g, {"nodes", "dt", "dt_coeff", "dt_power"}, "grid");
    if (g.contains("nodes")) {
      const json& n = g.at("nodes");
      rc.nodes = n.is_array() ? int_list(n, "grid.nodes")
                              : std::vector<int>{as_int(n, "grid.nodes")};
    }
    rc.dt = get_number(g, "dt", rc.dt);
    rc.dt_coeff = get_number(g, "dt_coeff", rc.dt_coeff);
    rc.dt_power = get_number(g, "dt_power", rc.dt_power);
  }
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    if (!s.is_object()) fail("solver", "expected an object");
    parse_solver(s, rc.solver);
  }
  seed_defaults(rc);
  if (doc.contains("converge")) parse_converge(doc.at("converge"), rc.converge);
  if (doc.contains("consistency"))
    parse_consistency(doc.at("consistency"), rc.consistency);
  if (doc.contains("barrier-audit"))
    parse_barrier(doc.at("barrier-audit"), rc.barrier);
  if (doc.contains("switching"))
    parse_switching(doc.at("switching"), rc.switching,
                    rc.problem.num_controls());
  if (doc.contains("dependence"))
    parse_dependence(doc.at("dependence"), rc.dependence);
  if (doc.contains("boundary-layer"))
    parse_boundary_layer(doc.at("boundary-layer"), rc.boundary_layer);
  return rc;
}

RunConfig load_config(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::exists(arg, ec)) {
    std::ifstream in(arg);
    if (!in) throw ConfigError("config: cannot read " + arg);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
  }
  if (arg.find('/') != std::string::npos || arg.ends_with(".json"))
    throw ConfigError("config: no such file: " + arg);
  RunConfig rc;
  rc.problem = builtin_problem(arg);
  seed_defaults(rc);
  return rc;
}

SpaceTimeGrid config_grid(const RunConfig& cfg) {
  const ControlProblem& p = cfg.problem;
  std::vector<int> nodes = cfg.nodes;
  if (static_cast<int>(nodes.size()) == 1 && p.dim == 2)
    nodes.push_back(nodes[0]);
  if (static_cast<int>(nodes.size()) != p.dim)
    throw ConfigError("config: grid.nodes does not match problem dimension");
  std::vector<double> lo(p.dim), up(p.dim);
  double dx_max = 0;
  for (int k = 0; k < p.dim; ++k) {
    lo[k] = p.lower[k];
    up[k] = p.upper[k];
    if (nodes[k] < 3) throw ConfigError("config: grid.nodes must be >= 3");
    dx_max = std::max(dx_max, (up[k] - lo[k]) / (nodes[k] - 1));
  }
  double nominal = cfg.dt > 0
                       ? cfg.dt
                       : cfg.dt_coeff * std::pow(dx_max, cfg.dt_power);
  if (!(nominal > 0)) throw ConfigError("config: time-step rule gives dt <= 0");
  int steps = std::max(1, static_cast<int>(std::ceil(
                              p.horizon / nominal - 1e-12)));
  return build_grid(lo, up, nodes, p.horizon / steps, steps);
}

SchemeKind scheme_from_name(const std::string& name) {
  if (name == "kd" || name == "fd") return SchemeKind::FiniteDifference;
  if (name == "sl") return SchemeKind::SemiLagrangian;
  throw ConfigError("config: unknown scheme \"" + name + "\" (use kd or sl)");
}

const char* scheme_name(SchemeKind scheme) {
  return scheme == SchemeKind::FiniteDifference ? "kd" : "sl";
}

PerturbField field_from_name(const std::string& name) {
  if (name == "sigma") return PerturbField::Sigma;
  if (name == "drift") return PerturbField::Drift;
  if (name == "discount") return PerturbField::Discount;
  if (name == "cost") return PerturbField::Cost;
  throw ConfigError("config: unknown coefficient field \"" + name +
                    "\" (use sigma, drift, discount or cost)");
}

const char* field_name(PerturbField field) {
  switch (field) {
    case PerturbField::Sigma: return "sigma";
    case PerturbField::Drift: return "drift";
    case PerturbField::Discount: return "discount";
    case PerturbField::Cost: return "cost";
  }
  return "?";
}

}  // namespace hjb
