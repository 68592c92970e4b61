#include "hjb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "hjb/errors.hpp"
#include "hjb/parallel.hpp"
#include "hjb/scheme_kd.hpp"

namespace hjb {

namespace {

void validate_problem(const ControlProblem& p, const SpaceTimeGrid& g) {
  if (p.dim != g.dim)
    throw ConfigError("solve: problem/grid dimension mismatch");
  if (p.controls.empty()) throw ConfigError("solve: empty control set");
  if (!p.sigma || !p.drift || !p.discount || !p.running_cost || !p.psi0 ||
      !p.psi1)
    throw ConfigError("solve: problem evaluators incomplete");
  for (int k = 0; k < g.dim; ++k) {
    const double scale = 1 + std::abs(p.lower[k]) + std::abs(p.upper[k]);
    if (std::abs(p.lower[k] - g.lower[k]) > 1e-12 * scale ||
        std::abs(p.upper[k] - g.upper[k]) > 1e-12 * scale)
      throw ConfigError("solve: grid box does not match the problem domain");
  }
}

void validate_config(const SolverConfig& cfg) {
  if (!(cfg.theta >= 0 && cfg.theta <= 1))
    throw ConfigError("solve: theta must lie in [0, 1]");
  if (!(cfg.policy_tol > 0) || !(cfg.linear_tol > 0))
    throw ConfigError("solve: tolerances must be positive");
  if (cfg.policy_max_iters < 1 || cfg.linear_max_iters < 1)
    throw ConfigError("solve: iteration caps must be positive");
}

void merge_positive(PositiveTypeReport& agg, bool& first,
                    const PositiveTypeReport& r) {
  if (first) {
    agg = r;
    first = false;
    return;
  }
  if (std::min(r.min_off_weight, r.min_explicit_coeff) <
      std::min(agg.min_off_weight, agg.min_explicit_coeff)) {
    agg.worst_node = r.worst_node;
    agg.worst_control = r.worst_control;
  }
  agg.min_off_weight = std::min(agg.min_off_weight, r.min_off_weight);
  agg.min_explicit_coeff =
      std::min(agg.min_explicit_coeff, r.min_explicit_coeff);
  agg.pass = agg.pass && r.pass;
}

// One theta-step marcher.  solve() drives a single instance; the switching
// solver drives one per mode in lockstep so the obstacle coupling can run
// between levels.
class Stepper {
 public:
  Stepper(const ControlProblem& p, const SpaceTimeGrid& g,
          const SolverConfig& cfg)
      : p_(&p),
        g_(&g),
        cfg_(cfg),
        dt_(g.dt),
        theta_(cfg.theta),
        interior_(g.interior_nodes()),
        inv_(static_cast<std::size_t>(g.num_nodes()), -1),
        policy_(interior_.size(), 0) {
    for (std::size_t i = 0; i < interior_.size(); ++i)
      inv_[static_cast<std::size_t>(interior_[i])] = static_cast<int>(i);
    for (int node = 0; node < g.num_nodes(); ++node)
      if (g.is_spatial_boundary(node)) boundary_.push_back(node);
    nI_ = static_cast<int>(interior_.size());
    nc_ = p.num_controls();
  }

  void set_initial_fn(const std::function<double(const Point&)>& fn) {
    init_fn_ = fn;
  }

  std::vector<double> initial(
      const std::function<double(const Point&)>& override_fn) {
    init_fn_ = override_fn ? override_fn : p_->psi0;
    std::vector<double> u(static_cast<std::size_t>(g_->num_nodes()));
    par::for_each(g_->num_nodes(), [&](std::int64_t i) {
      u[static_cast<std::size_t>(i)] = init_fn_(g_->point(static_cast<int>(i)));
    });
    data_max_ = par::max_reduce(g_->num_nodes(), 0.0, [&](std::int64_t i) {
      return std::abs(u[static_cast<std::size_t>(i)]);
    });
    return u;
  }

  std::vector<double> advance(int n, const std::vector<double>& prev) {
    const double tp = g_->time(n - 1);
    const double tc = g_->time(n);
    const double tth = tp + theta_ * dt_;

    if (theta_ < 1) assemble_level(tp, erows_);
    if (theta_ > 0) assemble_level(tc, irows_);

    bool first = !have_positive_;
    for (int c = 0; c < nc_; ++c) {
      if (theta_ < 1)
        merge_positive(diag_.positive, first,
                       check_positive_type(erows_[c], dt_, theta_));
      if (theta_ > 0)
        merge_positive(diag_.positive, first,
                       check_positive_type(irows_[c], dt_, 1.0));
    }
    have_positive_ = true;
    if (cfg_.require_positive_type && !diag_.positive.pass)
      throw NumericalError(
          "scheme is not of positive type (node " +
          std::to_string(diag_.positive.worst_node) + ", control " +
          std::to_string(diag_.positive.worst_control) + ", min weight " +
          std::to_string(diag_.positive.min_off_weight) +
          ", min explicit coefficient " +
          std::to_string(diag_.positive.min_explicit_coeff) + ")");

    std::vector<double> next(prev.size());
    const auto nb = static_cast<std::int64_t>(boundary_.size());
    par::for_each(nb, [&](std::int64_t i) {
      const int node = boundary_[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(node)] = p_->psi1(tc, g_->point(node));
    });
    data_max_ = par::max_reduce(nb, data_max_, [&](std::int64_t i) {
      return std::abs(
          next[static_cast<std::size_t>(boundary_[static_cast<std::size_t>(i)])]);
    });

    // Costs at the theta-averaged time, plus the sup trackers feeding the
    // a-priori bound.
    ell_.assign(static_cast<std::size_t>(nc_),
                std::vector<double>(static_cast<std::size_t>(nI_)));
    for (int c = 0; c < nc_; ++c) {
      auto& ec = ell_[static_cast<std::size_t>(c)];
      par::for_each(nI_, [&](std::int64_t i) {
        ec[static_cast<std::size_t>(i)] = p_->running_cost(
            c, tth, g_->point(interior_[static_cast<std::size_t>(i)]));
      });
      lsup_ = par::max_reduce(nI_, lsup_, [&](std::int64_t i) {
        return std::abs(ec[static_cast<std::size_t>(i)]);
      });
      lambda_ = par::max_reduce(nI_, lambda_, [&](std::int64_t i) {
        return p_->discount(c, tth,
                            g_->point(interior_[static_cast<std::size_t>(i)]));
      });
    }
    diag_.lambda = lambda_;
    diag_.cost_sup = lsup_;

    rhs_.assign(static_cast<std::size_t>(nc_),
                std::vector<double>(static_cast<std::size_t>(nI_)));
    for (int c = 0; c < nc_; ++c) {
      auto& bc = rhs_[static_cast<std::size_t>(c)];
      const auto& ec = ell_[static_cast<std::size_t>(c)];
      par::for_each(nI_, [&](std::int64_t ii) {
        const auto i = static_cast<std::size_t>(ii);
        const int node = interior_[i];
        double e = prev[static_cast<std::size_t>(node)];
        if (theta_ < 1) {
          const StencilRow& r = erows_[static_cast<std::size_t>(c)][i];
          double val =
              r.center_weight * prev[static_cast<std::size_t>(node)];
          for (const auto& [j, w] : r.node_terms)
            val -= w * prev[static_cast<std::size_t>(j)];
          for (const auto& [pt, w] : r.boundary_terms)
            val -= w * lateral(n - 1, tp, pt);
          e -= (1 - theta_) * dt_ * val;
        }
        double b = e + dt_ * ec[i];
        if (theta_ > 0) {
          const StencilRow& r = irows_[static_cast<std::size_t>(c)][i];
          for (const auto& [j, w] : r.node_terms)
            if (inv_[static_cast<std::size_t>(j)] < 0)
              b += theta_ * dt_ * w * next[static_cast<std::size_t>(j)];
          for (const auto& [pt, w] : r.boundary_terms)
            b += theta_ * dt_ * w * lateral(n, tc, pt);
        }
        bc[i] = b;
      });
    }

    if (theta_ == 0) {
      par::for_each(nI_, [&](std::int64_t ii) {
        const auto i = static_cast<std::size_t>(ii);
        double best = rhs_[0][i];
        int bc = 0;
        for (int c = 1; c < nc_; ++c)
          if (rhs_[static_cast<std::size_t>(c)][i] < best) {
            best = rhs_[static_cast<std::size_t>(c)][i];
            bc = c;
          }
        next[static_cast<std::size_t>(interior_[i])] = best;
        policy_[i] = bc;
      });
      return next;
    }

    sys_.assign(static_cast<std::size_t>(nc_),
                std::vector<SparseRow>(static_cast<std::size_t>(nI_)));
    for (int c = 0; c < nc_; ++c) {
      auto& sc = sys_[static_cast<std::size_t>(c)];
      par::for_each(nI_, [&](std::int64_t ii) {
        const auto i = static_cast<std::size_t>(ii);
        const StencilRow& r = irows_[static_cast<std::size_t>(c)][i];
        SparseRow row;
        row.diag = 1 + theta_ * dt_ * r.center_weight;
        for (const auto& [j, w] : r.node_terms) {
          const int jj = inv_[static_cast<std::size_t>(j)];
          if (jj >= 0) row.off.emplace_back(jj, -theta_ * dt_ * w);
        }
        sc[i] = std::move(row);
      });
    }

    std::vector<double> x(static_cast<std::size_t>(nI_));
    par::for_each(nI_, [&](std::int64_t i) {
      x[static_cast<std::size_t>(i)] =
          prev[static_cast<std::size_t>(interior_[static_cast<std::size_t>(i)])];
    });
    HowardOptions ho;
    ho.policy_tol = cfg_.policy_tol;
    ho.max_iters = cfg_.policy_max_iters;
    ho.linear_tol = cfg_.linear_tol;
    ho.linear_max_iters = cfg_.linear_max_iters;
    HowardReport hr;
    x = howard_solve(sys_, rhs_, std::move(x), policy_, ho, &hr);
    diag_.policy_sweeps_total += hr.improvement_sweeps;
    diag_.policy_sweeps_max =
        std::max(diag_.policy_sweeps_max, hr.improvement_sweeps);
    diag_.linear_solves += hr.linear_solves;
    diag_.linear_residual_max =
        std::max(diag_.linear_residual_max, hr.residual);
    diag_.howard_monotone = diag_.howard_monotone && hr.monotone;

    par::for_each(nI_, [&](std::int64_t i) {
      next[static_cast<std::size_t>(interior_[static_cast<std::size_t>(i)])] =
          x[static_cast<std::size_t>(i)];
    });
    return next;
  }

  double sup_bound(double t) const {
    return std::exp(lambda_ * t) * (data_max_ + t * lsup_);
  }

  // Verifies |u(t)|_inf <= e^(lambda t)(|data|_inf + t |l|_inf) with a
  // rounding slack; this inequality is exact for positive-type steps.
  void check_sup(double t, const std::vector<double>& vals,
                 double bound_override = -1) {
    const double s =
        par::max_reduce(static_cast<std::int64_t>(vals.size()), 0.0,
                        [&](std::int64_t i) {
                          return std::abs(vals[static_cast<std::size_t>(i)]);
                        });
    diag_.sup_observed = std::max(diag_.sup_observed, s);
    const double b = bound_override >= 0 ? bound_override : sup_bound(t);
    diag_.sup_bound = b;
    if (cfg_.check_sup_bound && s > b + 1e-8 * (1 + b))
      throw NumericalError("discrete sup bound violated at t=" +
                           std::to_string(t) + ": |u|=" + std::to_string(s) +
                           " > " + std::to_string(b));
  }

  const std::vector<int>& policy() const { return policy_; }
  const SolveDiagnostics& diag() const { return diag_; }
  const std::vector<int>& interior() const { return interior_; }

 private:
  double lateral(int level, double t, const Point& pt) const {
    return level == 0 ? init_fn_(pt) : p_->psi1(t, pt);
  }

  StencilRow make_row(double t, int ctrl, int node) const {
    if (cfg_.scheme == SchemeKind::FiniteDifference)
      return assemble_kd(*p_, *g_, t, ctrl, node);
    SLConfig sl = cfg_.sl;
    sl.theta = theta_;
    return assemble_sl(*p_, *g_, t, ctrl, node, sl);
  }

  void assemble_level(double t, std::vector<std::vector<StencilRow>>& rows) {
    rows.resize(static_cast<std::size_t>(nc_));
    for (int c = 0; c < nc_; ++c) {
      auto& rc = rows[static_cast<std::size_t>(c)];
      rc.resize(static_cast<std::size_t>(nI_));
      par::for_each(nI_, [&](std::int64_t i) {
        rc[static_cast<std::size_t>(i)] =
            make_row(t, c, interior_[static_cast<std::size_t>(i)]);
      });
    }
  }

  const ControlProblem* p_;
  const SpaceTimeGrid* g_;
  SolverConfig cfg_;
  double dt_;
  double theta_;
  std::vector<int> interior_;
  std::vector<int> inv_;
  std::vector<int> boundary_;
  int nI_ = 0;
  int nc_ = 0;
  std::function<double(const Point&)> init_fn_;
  std::vector<int> policy_;
  SolveDiagnostics diag_;
  bool have_positive_ = false;
  double data_max_ = 0;
  double lsup_ = 0;
  double lambda_ = 0;
  std::vector<std::vector<StencilRow>> erows_, irows_;
  std::vector<std::vector<double>> ell_, rhs_;
  std::vector<std::vector<SparseRow>> sys_;
};

// Regularity audit gate: A1 must pass; barrier audits are recorded only.
std::vector<AuditReport> run_problem_audits(const ControlProblem& p,
                                            const SpaceTimeGrid& g) {
  std::vector<AuditReport> audits;
  audits.push_back(audit_A1(p, g));
  if (!audits.back().pass) {
    const auto it = audits.back().details.find("growth_ratio");
    throw NumericalError(
        "regularity audit failed: coefficient difference quotients keep "
        "growing under refinement (ratio " +
        std::to_string(it == audits.back().details.end() ? -1.0 : it->second) +
        ")");
  }
  if (p.has_barrier()) {
    audits.push_back(audit_A2(p, g));
    audits.push_back(audit_A3(p, g));
  }
  return audits;
}

}  // namespace

SolveResult solve(const ControlProblem& p, const SpaceTimeGrid& g,
                  const SolverConfig& cfg, const LevelCallback& on_level,
                  const std::function<double(const Point&)>& initial_override) {
  validate_config(cfg);
  validate_problem(p, g);
  std::vector<AuditReport> audits;
  if (cfg.run_audits) audits = run_problem_audits(p, g);

  Stepper st(p, g, cfg);
  std::vector<double> u = st.initial(initial_override);
  st.check_sup(0.0, u);
  if (on_level) on_level(0, u);

  for (int n = 1; n <= g.n_steps; ++n) {
    u = st.advance(n, u);
    st.check_sup(g.time(n), u);
    if (on_level) on_level(n, u);
  }

  SolveResult res;
  res.u.grid = &g;
  res.u.time_level = g.n_steps;
  res.u.values = std::move(u);
  res.policy = st.policy();
  res.diag = st.diag();
  res.diag.audits = std::move(audits);
  return res;
}

std::vector<double> step(const ControlProblem& p, const SpaceTimeGrid& g,
                         const SolverConfig& cfg, int level_n,
                         const std::vector<double>& prev,
                         const std::function<double(const Point&)>&
                             initial_override) {
  validate_config(cfg);
  validate_problem(p, g);
  if (level_n < 1 || level_n > g.n_steps)
    throw ConfigError("step: level out of range");
  if (static_cast<int>(prev.size()) != g.num_nodes())
    throw ConfigError("step: level vector size mismatch");
  Stepper st(p, g, cfg);
  st.set_initial_fn(initial_override ? initial_override : p.psi0);
  return st.advance(level_n, prev);
}

std::vector<double> howard_solve(
    const std::vector<std::vector<SparseRow>>& rows,
    const std::vector<std::vector<double>>& rhs, std::vector<double> x,
    std::vector<int>& policy, const HowardOptions& opt, HowardReport* report) {
  const int nc = static_cast<int>(rows.size());
  if (nc < 1) throw ConfigError("howard_solve: no controls");
  const auto n = static_cast<std::int64_t>(x.size());
  for (int c = 0; c < nc; ++c)
    if (static_cast<std::int64_t>(rows[static_cast<std::size_t>(c)].size()) !=
            n ||
        static_cast<std::int64_t>(rhs[static_cast<std::size_t>(c)].size()) != n)
      throw ConfigError("howard_solve: system size mismatch");
  if (static_cast<std::int64_t>(policy.size()) != n)
    policy.assign(static_cast<std::size_t>(n), 0);
  if (n == 0) return x;

  int band = 0;
  for (const auto& sys : rows)
    for (std::size_t i = 0; i < sys.size(); ++i)
      for (const auto& [j, v] : sys[i].off) {
        (void)v;
        band = std::max(band, std::abs(j - static_cast<int>(i)));
      }
  const bool direct = band <= opt.direct_bandwidth_limit;

  auto S = [&](int c, std::int64_t i) {
    const SparseRow& r = rows[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    double s = r.diag * x[static_cast<std::size_t>(i)] -
               rhs[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    for (const auto& [j, v] : r.off) s += v * x[static_cast<std::size_t>(j)];
    return s;
  };

  HowardReport rep;
  rep.min_increment = 0;
  std::vector<int> prev_policy(policy.size());
  std::vector<SparseRow> frozen(static_cast<std::size_t>(n));
  std::vector<double> frozen_rhs(static_cast<std::size_t>(n));
  std::vector<double> x_prev;
  double res_prev = std::numeric_limits<double>::infinity();
  bool have_increment = false;

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    prev_policy = policy;
    par::for_each(n, [&](std::int64_t i) {
      int best = 0;
      double bv = S(0, i);
      for (int c = 1; c < nc; ++c) {
        const double v = S(c, i);
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      policy[static_cast<std::size_t>(i)] = best;
    });
    ++rep.improvement_sweeps;

    const double res = par::max_reduce(n, 0.0, [&](std::int64_t i) {
      return std::abs(S(policy[static_cast<std::size_t>(i)], i));
    });
    rep.residual = res;
    if (res > res_prev * (1 + 1e-12) + 1e-12) rep.monotone = false;
    res_prev = res;
    if (policy == prev_policy && res <= opt.policy_tol) {
      if (report) *report = rep;
      return x;
    }

    par::for_each(n, [&](std::int64_t i) {
      const int c = policy[static_cast<std::size_t>(i)];
      frozen[static_cast<std::size_t>(i)] =
          rows[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
      frozen_rhs[static_cast<std::size_t>(i)] =
          rhs[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    });
    if (direct) {
      BandedLU lu(static_cast<int>(n), band);
      for (std::int64_t i = 0; i < n; ++i) {
        const auto& r = frozen[static_cast<std::size_t>(i)];
        lu.at(static_cast<int>(i), static_cast<int>(i)) = r.diag;
        // accumulate: rows may carry several terms for one target (e.g. a
        // drift leg landing on a diffusion neighbour)
        for (const auto& [j, v] : r.off) lu.at(static_cast<int>(i), j) += v;
      }
      lu.factor();
      x = lu.solve(frozen_rhs);
    } else {
      const auto gs = gauss_seidel(frozen, frozen_rhs, x, opt.linear_tol,
                                   opt.linear_max_iters);
      rep.residual = gs.residual;
    }
    ++rep.linear_solves;
    // Max-type Howard produces nondecreasing iterates from the second
    // evaluation on; record the worst step as a diagnostic.
    if (!x_prev.empty()) {
      double inc = std::numeric_limits<double>::infinity();
      double scale = 1;
      for (std::size_t i = 0; i < x.size(); ++i) {
        inc = std::min(inc, x[i] - x_prev[i]);
        scale = std::max(scale, std::abs(x[i]));
      }
      rep.min_increment =
          have_increment ? std::min(rep.min_increment, inc) : inc;
      have_increment = true;
      if (inc < -1e-12 * scale) rep.monotone = false;
    }
    x_prev = x;
  }
  throw NumericalError("howard_solve: no convergence within " +
                       std::to_string(opt.max_iters) + " policy iterations");
}

SwitchingResult solve_switching(const ControlProblem& p,
                                const SpaceTimeGrid& g,
                                const SwitchingConfig& cfg,
                                const SwitchingLevelCallback& on_level) {
  validate_config(cfg.base);
  validate_problem(p, g);
  const int M = static_cast<int>(cfg.mode_controls.size());
  if (M < 1) throw ConfigError("switching: at least one mode required");
  if (!(cfg.switch_cost > 0))
    throw ConfigError("switching: switch cost must be positive");
  std::vector<AuditReport> audits;
  if (cfg.base.run_audits) audits = run_problem_audits(p, g);

  // Every mode sees the same dynamics, restricted to its own control list.
  std::vector<ControlProblem> probs(static_cast<std::size_t>(M), p);
  for (int m = 0; m < M; ++m) {
    const auto& sub = cfg.mode_controls[static_cast<std::size_t>(m)];
    if (sub.empty()) throw ConfigError("switching: empty mode control set");
    auto& pm = probs[static_cast<std::size_t>(m)];
    pm.controls.clear();
    for (int idx : sub) {
      if (idx < 0 || idx >= p.num_controls())
        throw ConfigError("switching: control index out of range");
      pm.controls.push_back(p.controls[static_cast<std::size_t>(idx)]);
    }
    pm.sigma = [f = p.sigma, sub](int c, double t, const Point& x,
                                  double* out) {
      f(sub[static_cast<std::size_t>(c)], t, x, out);
    };
    pm.drift = [f = p.drift, sub](int c, double t, const Point& x,
                                  double* out) {
      f(sub[static_cast<std::size_t>(c)], t, x, out);
    };
    pm.discount = [f = p.discount, sub](int c, double t, const Point& x) {
      return f(sub[static_cast<std::size_t>(c)], t, x);
    };
    pm.running_cost = [f = p.running_cost, sub](int c, double t,
                                                const Point& x) {
      return f(sub[static_cast<std::size_t>(c)], t, x);
    };
  }

  std::vector<Stepper> steppers;
  steppers.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m)
    steppers.emplace_back(probs[static_cast<std::size_t>(m)], g, cfg.base);

  std::vector<std::vector<double>> us(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m)
    us[static_cast<std::size_t>(m)] = steppers[static_cast<std::size_t>(m)].initial({});
  if (on_level)
    for (int m = 0; m < M; ++m)
      on_level(0, m, us[static_cast<std::size_t>(m)]);

  const auto interior = g.interior_nodes();
  const auto nI = static_cast<std::int64_t>(interior.size());
  std::vector<double> tmp(interior.size());
  SwitchingResult out;

  for (int n = 1; n <= g.n_steps; ++n) {
    for (int m = 0; m < M; ++m) {
      auto& um = us[static_cast<std::size_t>(m)];
      um = steppers[static_cast<std::size_t>(m)].advance(n, um);
    }

    // Obstacle projection, swept in mode order until nothing moves.  Each
    // pointwise min can only lower a value, and a value can cascade through
    // at most M-1 other modes, so the cap is generous.
    const int cap = 2 * M + 4;
    int sweeps = 0;
    for (bool changed = true; changed;) {
      if (++sweeps > cap)
        throw NumericalError("switching: obstacle projection did not settle");
      changed = false;
      for (int m = 0; m < M; ++m) {
        auto& um = us[static_cast<std::size_t>(m)];
        par::for_each(nI, [&](std::int64_t i) {
          const int node = interior[static_cast<std::size_t>(i)];
          double best = um[static_cast<std::size_t>(node)];
          for (int j = 0; j < M; ++j) {
            if (j == m) continue;
            best = std::min(best,
                            us[static_cast<std::size_t>(j)]
                              [static_cast<std::size_t>(node)] +
                                cfg.switch_cost);
          }
          tmp[static_cast<std::size_t>(i)] = best;
        });
        const double delta = par::max_reduce(nI, 0.0, [&](std::int64_t i) {
          return um[static_cast<std::size_t>(
                     interior[static_cast<std::size_t>(i)])] -
                 tmp[static_cast<std::size_t>(i)];
        });
        if (delta > 0) changed = true;
        par::for_each(nI, [&](std::int64_t i) {
          um[static_cast<std::size_t>(interior[static_cast<std::size_t>(i)])] =
              tmp[static_cast<std::size_t>(i)];
        });
      }
    }
    out.projection_sweeps_max = std::max(out.projection_sweeps_max, sweeps);

    // Obstacle feasibility must hold exactly once the sweeps settle.
    for (int m = 0; m < M; ++m) {
      const double excess = par::max_reduce(nI, 0.0, [&](std::int64_t i) {
        const int node = interior[static_cast<std::size_t>(i)];
        double other = std::numeric_limits<double>::infinity();
        for (int j = 0; j < M; ++j)
          if (j != m)
            other = std::min(other, us[static_cast<std::size_t>(j)]
                                      [static_cast<std::size_t>(node)]);
        if (M == 1) return 0.0;
        return us[static_cast<std::size_t>(m)][static_cast<std::size_t>(node)] -
               (other + cfg.switch_cost);
      });
      if (excess > 1e-12)
        throw NumericalError("switching: obstacle feasibility violated by " +
                             std::to_string(excess));
    }

    double bound = 0;
    for (int m = 0; m < M; ++m)
      bound = std::max(bound,
                       steppers[static_cast<std::size_t>(m)].sup_bound(g.time(n)));
    for (int m = 0; m < M; ++m)
      steppers[static_cast<std::size_t>(m)].check_sup(
          g.time(n), us[static_cast<std::size_t>(m)], bound);
    if (on_level)
      for (int m = 0; m < M; ++m)
        on_level(n, m, us[static_cast<std::size_t>(m)]);
  }

  out.modes.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    auto& f = out.modes[static_cast<std::size_t>(m)];
    f.grid = &g;
    f.time_level = g.n_steps;
    f.values = std::move(us[static_cast<std::size_t>(m)]);
  }
  for (int m = 0; m < M; ++m) {
    const auto& d = steppers[static_cast<std::size_t>(m)].diag();
    out.diag.policy_sweeps_total += d.policy_sweeps_total;
    out.diag.policy_sweeps_max =
        std::max(out.diag.policy_sweeps_max, d.policy_sweeps_max);
    out.diag.linear_solves += d.linear_solves;
    out.diag.linear_residual_max =
        std::max(out.diag.linear_residual_max, d.linear_residual_max);
    out.diag.sup_observed = std::max(out.diag.sup_observed, d.sup_observed);
    out.diag.sup_bound = std::max(out.diag.sup_bound, d.sup_bound);
    out.diag.lambda = std::max(out.diag.lambda, d.lambda);
    out.diag.cost_sup = std::max(out.diag.cost_sup, d.cost_sup);
    out.diag.howard_monotone = out.diag.howard_monotone && d.howard_monotone;
    bool first = m == 0;
    merge_positive(out.diag.positive, first, d.positive);
  }
  out.diag.audits = std::move(audits);
  return out;
}

}  // namespace hjb
