#include "hjb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hjb/errors.hpp"
#include "hjb/grid.hpp"
#include "hjb/parallel.hpp"
#include "hjb/scheme_kd.hpp"
#include "hjb/scheme_sl.hpp"

namespace hjb {
namespace {

// dt = coeff * dx^power, shrunk so an integer number of steps lands on T.
struct TimeRule {
  double dt = 0;
  int steps = 0;
};

TimeRule snap_dt(double T, double dx, double coeff, double power) {
  if (!(coeff > 0) || !(power > 0))
    throw ConfigError("time rule: coeff and power must be positive");
  const double nominal = coeff * std::pow(dx, power);
  int steps = static_cast<int>(std::ceil(T / nominal - 1e-12));
  steps = std::max(steps, 1);
  return {T / steps, steps};
}

double max_dx(const SpaceTimeGrid& g) {
  double m = 0;
  for (int k = 0; k < g.dim; ++k) m = std::max(m, g.dx[k]);
  return m;
}

SpaceTimeGrid study_grid(const ControlProblem& p, int nodes, double dt_coeff,
                         double dt_power) {
  if (nodes < 3) throw ConfigError("study grid: fewer than three nodes");
  std::vector<double> lo(static_cast<std::size_t>(p.dim));
  std::vector<double> hi(static_cast<std::size_t>(p.dim));
  std::vector<int> npa(static_cast<std::size_t>(p.dim), nodes);
  double dx = 0;
  for (int k = 0; k < p.dim; ++k) {
    lo[static_cast<std::size_t>(k)] = p.lower[static_cast<std::size_t>(k)];
    hi[static_cast<std::size_t>(k)] = p.upper[static_cast<std::size_t>(k)];
    dx = std::max(dx, (p.upper[static_cast<std::size_t>(k)] -
                       p.lower[static_cast<std::size_t>(k)]) /
                          (nodes - 1));
  }
  const auto rule = snap_dt(p.horizon, dx, dt_coeff, dt_power);
  return build_grid(lo, hi, npa, rule.dt, rule.steps);
}

// Dense Gaussian elimination with partial pivoting for the tiny normal
// systems inside nnls_fit.  Returns false when a pivot degenerates (e.g. a
// zero column was included in the active set).
bool solve_small(std::vector<double> A, std::vector<double> b, int k,
                 std::vector<double>& x) {
  double scale = 0;
  for (double v : A) scale = std::max(scale, std::fabs(v));
  if (scale == 0) return false;
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  auto at = [&](int i, int j) -> double& {
    return A[static_cast<std::size_t>(i * k + j)];
  };
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::fabs(at(r, col)) > std::fabs(at(piv, col))) piv = r;
    if (std::fabs(at(piv, col)) <= 1e-13 * scale) return false;
    if (piv != col) {
      for (int j = 0; j < k; ++j) std::swap(at(piv, j), at(col, j));
      std::swap(b[static_cast<std::size_t>(piv)],
                b[static_cast<std::size_t>(col)]);
    }
    for (int r = col + 1; r < k; ++r) {
      const double m = at(r, col) / at(col, col);
      for (int j = col; j < k; ++j) at(r, j) -= m * at(col, j);
      b[static_cast<std::size_t>(r)] -= m * b[static_cast<std::size_t>(col)];
    }
  }
  x.assign(static_cast<std::size_t>(k), 0.0);
  for (int r = k - 1; r >= 0; --r) {
    double s = b[static_cast<std::size_t>(r)];
    for (int j = r + 1; j < k; ++j)
      s -= at(r, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(r)] = s / at(r, r);
  }
  return true;
}

StencilRow probe_row(const ControlProblem& p, const SpaceTimeGrid& g,
                     SchemeKind scheme, double theta, double t, int ctrl,
                     int node) {
  if (scheme == SchemeKind::FiniteDifference)
    return assemble_kd(p, g, t, ctrl, node);
  SLConfig sc;
  sc.theta = theta;
  return assemble_sl(p, g, t, ctrl, node, sc);
}

// Mollification of a probe profile by a product bump kernel, scaled eps^2
// in time and eps in space.  Derivatives fall on the kernel, so the profile
// itself only ever needs point values: that is what lets a Lipschitz kink
// be probed with second derivatives.
struct Mollifier {
  struct QP {
    double tshift = 0;
    Point xshift{};
    double wv = 0, wt = 0;
    double wg[2] = {0, 0};
    double wh[3] = {0, 0, 0};  // H00, H11, H01
  };

  int dim = 1;
  bool smooth = false;  // analytic profile, no mollification
  Point x0{};
  double t0 = 0;
  std::vector<QP> pts;

  Mollifier(int dim_, double eps, int quad, bool smooth_, const Point& x0_,
            double t0_)
      : dim(dim_), smooth(smooth_), x0(x0_), t0(t0_) {
    if (smooth) return;
    const int Q = quad;
    const double e2 = eps * eps;
    std::vector<double> tv(static_cast<std::size_t>(Q)),
        tw(static_cast<std::size_t>(Q)), tf(static_cast<std::size_t>(Q));
    double zt = 0;
    for (int q = 0; q < Q; ++q) {
      const double sig = (q + 0.5) / Q;
      const double s = 2 * sig - 1;
      const double om = 1 - s * s;
      const double rho = std::exp(-1.0 / om);
      tv[static_cast<std::size_t>(q)] = sig;
      tw[static_cast<std::size_t>(q)] = rho;
      tf[static_cast<std::size_t>(q)] = -4 * s / (om * om);
      zt += rho / Q;
    }
    const int nsp = dim == 1 ? Q : Q * Q;
    const double vol = std::pow(2.0 / Q, dim);
    std::vector<Point> zs(static_cast<std::size_t>(nsp));
    std::vector<double> zw(static_cast<std::size_t>(nsp), 0.0);
    double zx = 0;
    for (int i = 0; i < nsp; ++i) {
      Point z{};
      z[0] = -1 + (2.0 * (i % Q) + 1) / Q;
      if (dim == 2) z[1] = -1 + (2.0 * (i / Q) + 1) / Q;
      const double r2 = z[0] * z[0] + z[1] * z[1];
      zs[static_cast<std::size_t>(i)] = z;
      if (r2 < 1) {
        zw[static_cast<std::size_t>(i)] = std::exp(-1.0 / (1 - r2));
        zx += zw[static_cast<std::size_t>(i)] * vol;
      }
    }
    pts.reserve(static_cast<std::size_t>(Q * nsp));
    for (int q = 0; q < Q; ++q) {
      const double wt_time = tw[static_cast<std::size_t>(q)] / Q / zt;
      if (wt_time == 0) continue;
      for (int i = 0; i < nsp; ++i) {
        const double wx = zw[static_cast<std::size_t>(i)] * vol / zx;
        if (wx == 0) continue;
        const Point& z = zs[static_cast<std::size_t>(i)];
        const double r2 = z[0] * z[0] + z[1] * z[1];
        const double om = 1 - r2;
        QP p;
        p.tshift = e2 * tv[static_cast<std::size_t>(q)];
        for (int k = 0; k < dim; ++k) p.xshift[k] = eps * z[k];
        p.wv = wt_time * wx;
        p.wt = p.wv * tf[static_cast<std::size_t>(q)] / e2;
        const double gden = om * om;
        for (int k = 0; k < dim; ++k)
          p.wg[k] = p.wv * (-2 * z[k] / gden) / eps;
        auto hess = [&](int a, int b) {
          const double kron = a == b ? 1.0 : 0.0;
          return 4 * z[a] * z[b] / (gden * gden) - 2 * kron / gden -
                 8 * z[a] * z[b] / (gden * om);
        };
        p.wh[0] = p.wv * hess(0, 0) / e2;
        if (dim == 2) {
          p.wh[1] = p.wv * hess(1, 1) / e2;
          p.wh[2] = p.wv * hess(0, 1) / e2;
        }
        pts.push_back(p);
      }
    }
  }

  double base(double t, const Point& x) const {
    if (smooth) {
      double v = std::exp(-t) * std::sin(M_PI * x[0]);
      if (dim == 2) v *= std::sin(M_PI * x[1]);
      return v;
    }
    double r2 = 0;
    for (int k = 0; k < dim; ++k) r2 += (x[k] - x0[k]) * (x[k] - x0[k]);
    return std::sqrt(r2) + std::sqrt(std::fabs(t - t0));
  }

  double value(double t, const Point& x) const {
    if (smooth) return base(t, x);
    double acc = 0;
    for (const auto& q : pts) {
      Point y = x;
      for (int k = 0; k < dim; ++k) y[k] -= q.xshift[k];
      acc += q.wv * base(t - q.tshift, y);
    }
    return acc;
  }

  struct Jet {
    double v = 0, vt = 0;
    double g[2] = {0, 0};
    double h[3] = {0, 0, 0};
  };

  Jet jet(double t, const Point& x) const {
    Jet out;
    if (smooth) {
      const double et = std::exp(-t);
      const double s0 = std::sin(M_PI * x[0]), c0 = std::cos(M_PI * x[0]);
      const double s1 = dim == 2 ? std::sin(M_PI * x[1]) : 1.0;
      const double c1 = dim == 2 ? std::cos(M_PI * x[1]) : 0.0;
      out.v = et * s0 * s1;
      out.vt = -out.v;
      out.g[0] = et * M_PI * c0 * s1;
      out.h[0] = -M_PI * M_PI * out.v;
      if (dim == 2) {
        out.g[1] = et * M_PI * s0 * c1;
        out.h[1] = -M_PI * M_PI * out.v;
        out.h[2] = et * M_PI * M_PI * c0 * c1;
      }
      return out;
    }
    for (const auto& q : pts) {
      Point y = x;
      for (int k = 0; k < dim; ++k) y[k] -= q.xshift[k];
      const double chi = base(t - q.tshift, y);
      out.v += q.wv * chi;
      out.vt += q.wt * chi;
      for (int k = 0; k < dim; ++k) out.g[k] += q.wg[k] * chi;
      out.h[0] += q.wh[0] * chi;
      if (dim == 2) {
        out.h[1] += q.wh[1] * chi;
        out.h[2] += q.wh[2] * chi;
      }
    }
    return out;
  }
};

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw NumericalError(std::string(what) + ": non-finite value");
}

// Exact (or reference) solution values at the final time on g's nodes.
std::vector<double> final_reference(const ControlProblem& p,
                                    const SpaceTimeGrid& g,
                                    const SolverConfig& base, int refine,
                                    double dt_coeff, double dt_power) {
  std::vector<double> ref(static_cast<std::size_t>(g.num_nodes()));
  const double T = g.horizon();
  if (p.has_exact()) {
    par::for_each(g.num_nodes(), [&](std::int64_t i) {
      ref[static_cast<std::size_t>(i)] =
          p.exact(T, g.point(static_cast<int>(i)));
    });
    return ref;
  }
  if (refine < 2)
    throw ConfigError("convergence: reference_refine must be at least 2");
  const int fine_nodes = (g.nodes[0] - 1) * refine + 1;
  SpaceTimeGrid gf = study_grid(p, fine_nodes, dt_coeff, dt_power);
  SolverConfig rcfg = base;
  rcfg.run_audits = false;
  const auto res = solve(p, gf, rcfg);
  par::for_each(g.num_nodes(), [&](std::int64_t i) {
    const auto mi = g.multi_index(static_cast<int>(i));
    ref[static_cast<std::size_t>(i)] =
        res.u.values[static_cast<std::size_t>(
            gf.node_of(mi[0] * refine, g.dim == 2 ? mi[1] * refine : 0))];
  });
  return ref;
}

}  // namespace

OrderBounds theoretical_orders(SchemeKind scheme, double theta) {
  if (!(theta >= 0) || !(theta <= 1))
    throw ConfigError("theoretical_orders: theta outside [0,1]");
  OrderBounds b;
  if (scheme == SchemeKind::FiniteDifference) {
    b.dt_lower = 1.0 / 10;
    b.dx_lower = 1.0 / 5;
    b.dt_upper = 1.0 / 4;
    b.dx_upper = 1.0 / 2;
  } else if (theta == 0.5) {
    b.dt_lower = 1.0 / 8;
    b.dx_lower = 1.0 / 10;
    b.dt_upper = 1.0 / 3;
    b.dx_upper = 1.0 / 4;
  } else {
    b.dt_lower = 1.0 / 10;
    b.dx_lower = 1.0 / 10;
    b.dt_upper = 1.0 / 4;
    b.dx_upper = 1.0 / 4;
  }
  return b;
}

double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("loglog_slope: need matching data with >= 2 points");
  const auto n = x.size();
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0))
      throw ConfigError("loglog_slope: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  if (den == 0) throw ConfigError("loglog_slope: abscissae all equal");
  return num / den;
}

std::vector<double> nnls_fit(const std::vector<std::vector<double>>& columns,
                             const std::vector<double>& y, double* residual) {
  const int k = static_cast<int>(columns.size());
  const auto m = y.size();
  if (k < 1 || k > 12) throw ConfigError("nnls_fit: need 1..12 columns");
  for (const auto& c : columns)
    if (c.size() != m) throw ConfigError("nnls_fit: column size mismatch");
  if (m < 1) throw ConfigError("nnls_fit: empty data");

  double y2 = 0;
  for (double v : y) y2 += v * v;

  // Try every support set, smallest first; the optimum of the cone-
  // constrained problem is the unconstrained fit on some support with
  // nonnegative coefficients.
  std::vector<int> masks;
  for (int mask = 0; mask < (1 << k); ++mask) masks.push_back(mask);
  std::stable_sort(masks.begin(), masks.end(), [](int a, int b) {
    return __builtin_popcount(static_cast<unsigned>(a)) <
           __builtin_popcount(static_cast<unsigned>(b));
  });

  double best = y2;
  std::vector<double> best_c(static_cast<std::size_t>(k), 0.0);
  for (int mask : masks) {
    if (mask == 0) continue;
    std::vector<int> cols;
    for (int j = 0; j < k; ++j)
      if (mask & (1 << j)) cols.push_back(j);
    const int kk = static_cast<int>(cols.size());
    std::vector<double> G(static_cast<std::size_t>(kk * kk), 0.0);
    std::vector<double> r(static_cast<std::size_t>(kk), 0.0);
    for (int a = 0; a < kk; ++a) {
      const auto& ca = columns[static_cast<std::size_t>(cols[static_cast<std::size_t>(a)])];
      for (int b = 0; b < kk; ++b) {
        const auto& cb = columns[static_cast<std::size_t>(cols[static_cast<std::size_t>(b)])];
        double s = 0;
        for (std::size_t i = 0; i < m; ++i) s += ca[i] * cb[i];
        G[static_cast<std::size_t>(a * kk + b)] = s;
      }
      double s = 0;
      for (std::size_t i = 0; i < m; ++i) s += ca[i] * y[i];
      r[static_cast<std::size_t>(a)] = s;
    }
    std::vector<double> c;
    if (!solve_small(G, r, kk, c)) continue;
    bool feasible = true;
    for (double v : c)
      if (!(v >= 0)) feasible = false;
    if (!feasible) continue;
    double rr = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double fit = 0;
      for (int a = 0; a < kk; ++a)
        fit += c[static_cast<std::size_t>(a)] *
               columns[static_cast<std::size_t>(
                   cols[static_cast<std::size_t>(a)])][i];
      rr += (y[i] - fit) * (y[i] - fit);
    }
    if (rr < best * (1 - 1e-12)) {
      best = rr;
      std::fill(best_c.begin(), best_c.end(), 0.0);
      for (int a = 0; a < kk; ++a)
        best_c[static_cast<std::size_t>(cols[static_cast<std::size_t>(a)])] =
            c[static_cast<std::size_t>(a)];
    }
  }
  if (residual) *residual = std::sqrt(std::max(best, 0.0));
  return best_c;
}

ConvergenceReport convergence_study(const ControlProblem& p,
                                    const ConvergenceConfig& cfg) {
  if (cfg.nodes_ladder.size() < 3)
    throw ConfigError("convergence: ladder needs at least three rungs");
  for (std::size_t r = 0; r + 1 < cfg.nodes_ladder.size(); ++r)
    if (cfg.nodes_ladder[r] >= cfg.nodes_ladder[r + 1])
      throw ConfigError("convergence: ladder must strictly refine");

  ConvergenceReport rep;
  rep.scheme_id =
      cfg.scheme == SchemeKind::FiniteDifference ? "kd" : "sl";
  rep.theta = cfg.theta;
  rep.bounds = theoretical_orders(cfg.scheme, cfg.theta);
  rep.required_order =
      std::min(rep.bounds.dt_lower * cfg.dt_power, rep.bounds.dx_lower);

  SolverConfig base = cfg.base;
  base.scheme = cfg.scheme;
  base.theta = cfg.theta;
  const bool audit_once = base.run_audits;

  for (std::size_t r = 0; r < cfg.nodes_ladder.size(); ++r) {
    const SpaceTimeGrid g =
        study_grid(p, cfg.nodes_ladder[r], cfg.dt_coeff, cfg.dt_power);
    base.run_audits = audit_once && r == 0;
    const auto res = solve(p, g, base);
    const auto ref = final_reference(p, g, base, cfg.reference_refine,
                                     cfg.dt_coeff, cfg.dt_power);

    Rung rung;
    rung.nodes = cfg.nodes_ladder[r];
    rung.dx = max_dx(g);
    rung.dt = g.dt;
    rung.err_global = par::max_reduce(g.num_nodes(), 0.0, [&](std::int64_t i) {
      return std::fabs(res.u.values[static_cast<std::size_t>(i)] -
                       ref[static_cast<std::size_t>(i)]);
    });
    rung.err_interior = par::max_reduce(g.num_nodes(), 0.0, [&](std::int64_t i) {
      const int node = static_cast<int>(i);
      if (distance_to_boundary(g, g.point(node)) <= cfg.interior_margin)
        return 0.0;
      return std::fabs(res.u.values[static_cast<std::size_t>(i)] -
                       ref[static_cast<std::size_t>(i)]);
    });
    check_finite(rung.err_global, "convergence error");
    rep.rungs.push_back(rung);
  }

  rep.monotone = true;
  for (std::size_t r = 1; r < rep.rungs.size(); ++r) {
    if (rep.rungs[r].err_global >
        rep.rungs[r - 1].err_global * cfg.monotone_factor)
      rep.monotone = false;
    if (rep.rungs[r].err_interior >
        rep.rungs[r - 1].err_interior * cfg.monotone_factor)
      rep.monotone = false;
  }

  const std::size_t nfit = 3;
  std::vector<double> fx, fg, fi;
  for (std::size_t r = rep.rungs.size() - nfit; r < rep.rungs.size(); ++r) {
    fx.push_back(rep.rungs[r].dx);
    fg.push_back(std::max(rep.rungs[r].err_global, 1e-250));
    fi.push_back(std::max(rep.rungs[r].err_interior, 1e-250));
  }
  rep.fitted_order_global = loglog_slope(fx, fg);
  rep.fitted_order_interior = loglog_slope(fx, fi);
  rep.pass = rep.monotone &&
             rep.fitted_order_global >= rep.required_order - cfg.order_tol;
  return rep;
}

ConsistencyReport consistency_probe(const ControlProblem& p,
                                    const ConsistencyConfig& cfg) {
  if (cfg.eps_ladder.empty() || cfg.dt_factors.empty())
    throw ConfigError("consistency: empty ladder");
  if (cfg.quadrature < 4)
    throw ConfigError("consistency: quadrature too coarse");
  if (!(cfg.theta >= 0) || !(cfg.theta <= 1))
    throw ConfigError("consistency: theta outside [0,1]");
  const SpaceTimeGrid g0 = study_grid(p, cfg.nodes, 1.0, 1.0);
  const double dx = max_dx(g0);
  for (double eps : cfg.eps_ladder)
    if (!(eps >= 2 * dx))
      throw ConfigError(
          "consistency: eps must be at least twice the mesh width");
  for (double f : cfg.dt_factors)
    if (!(f > 0)) throw ConfigError("consistency: dt factors must be positive");

  const double T = p.horizon;
  Point x0{};
  for (int k = 0; k < p.dim; ++k)
    x0[static_cast<std::size_t>(k)] =
        p.lower[static_cast<std::size_t>(k)] +
        cfg.x0_rel * (p.upper[static_cast<std::size_t>(k)] -
                      p.lower[static_cast<std::size_t>(k)]);
  const double t0 = cfg.t0_rel * T;
  const double theta = cfg.theta;

  ConsistencyReport rep;
  for (double eps : cfg.eps_ladder) {
    const Mollifier moll(p.dim, eps, cfg.quadrature, cfg.smooth_field, x0, t0);
    for (double f : cfg.dt_factors) {
      const double dt = f * dx;
      const int steps =
          std::max(1, static_cast<int>(std::floor(T / dt + 1e-12)));
      std::vector<double> lo(static_cast<std::size_t>(p.dim)),
          hi(static_cast<std::size_t>(p.dim));
      std::vector<int> npa(static_cast<std::size_t>(p.dim), cfg.nodes);
      for (int k = 0; k < p.dim; ++k) {
        lo[static_cast<std::size_t>(k)] = p.lower[static_cast<std::size_t>(k)];
        hi[static_cast<std::size_t>(k)] = p.upper[static_cast<std::size_t>(k)];
      }
      const SpaceTimeGrid g = build_grid(lo, hi, npa, dt, steps);

      // The kink probe stays eps away from the boundary (that is where the
      // scaled derivative bounds live); the smooth profile has no kink to
      // avoid and probes the whole interior.
      std::vector<int> eligible;
      for (int node : g.interior_nodes())
        if (cfg.smooth_field || distance_to_boundary(g, g.point(node)) > eps)
          eligible.push_back(node);
      if (eligible.empty())
        throw ConfigError("consistency: eps leaves no probe nodes");

      // Probe near the initial time, the kink time and the final time; the
      // worst truncation lives where the mollified profile still bends.
      std::vector<int> levels = {1, g.n_steps};
      const int k0 = std::clamp(
          static_cast<int>(std::llround(t0 / dt)), 1, g.n_steps);
      levels.push_back(k0);
      levels.push_back(std::clamp(k0 - 1, 1, g.n_steps));
      levels.push_back(std::clamp(k0 + 1, 1, g.n_steps));
      levels.push_back(std::clamp(g.n_steps / 2, 1, g.n_steps));
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

      double measured = 0;
      for (int n : levels) {
        const double tn = g.time(n);
        const double tp = tn - dt;
        const double tth = tp + theta * dt;
        const double lvl_max = par::max_reduce(
            static_cast<std::int64_t>(eligible.size()), 0.0,
            [&](std::int64_t ei) {
              const int node = eligible[static_cast<std::size_t>(ei)];
              const Point xc = g.point(node);
              const double phin = moll.value(tn, xc);
              const double phip = moll.value(tp, xc);
              const auto jet = moll.jet(tth, xc);
              double worst = 0;
              for (int c = 0; c < p.num_controls(); ++c) {
                auto lrow = [&](const StencilRow& row, double s,
                                double center_val) {
                  double acc = row.center_weight * center_val;
                  for (const auto& [j, w] : row.node_terms)
                    acc -= w * moll.value(s, g.point(j));
                  for (const auto& [pt, w] : row.boundary_terms)
                    acc -= w * moll.value(s, pt);
                  return acc;
                };
                double s_over_dt = (phin - phip) / dt;
                if (theta > 0) {
                  const StencilRow row =
                      probe_row(p, g, cfg.scheme, theta, tn, c, node);
                  s_over_dt += theta * lrow(row, tn, phin);
                }
                if (theta < 1) {
                  const StencilRow row =
                      probe_row(p, g, cfg.scheme, theta, tp, c, node);
                  s_over_dt += (1 - theta) * lrow(row, tp, phip);
                }
                // The running cost enters both sides at t_(n-1+theta) and
                // cancels, so it is omitted from each.
                double a4[4] = {0, 0, 0, 0};
                p.diffusion(c, tth, xc, a4);
                double b2[2] = {0, 0};
                p.drift(c, tth, xc, b2);
                const double cd = p.discount(c, tth, xc);
                double lphi = -(a4[0] * jet.h[0]);
                if (p.dim == 2)
                  lphi -= a4[3] * jet.h[1] + (a4[1] + a4[2]) * jet.h[2];
                for (int k = 0; k < p.dim; ++k) lphi -= b2[k] * jet.g[k];
                lphi -= cd * jet.v;
                const double pde = jet.vt + lphi;
                worst = std::max(worst, std::fabs(s_over_dt - pde));
              }
              return worst;
            });
        measured = std::max(measured, lvl_max);
      }
      check_finite(measured, "consistency probe");
      rep.samples.push_back({eps, dt, measured});
    }
  }

  // With the smooth (unmollified) profile the eps scalings are moot; the
  // fit then checks the plain dt/dt^2/dx truncation model instead.
  std::vector<double> y;
  std::vector<std::vector<double>> cols(3);
  for (const auto& s : rep.samples) {
    const double e3 = cfg.smooth_field ? 1.0 : s.eps * s.eps * s.eps;
    const double e5 = cfg.smooth_field ? 1.0 : std::pow(s.eps, 5);
    y.push_back(s.measured);
    cols[0].push_back(std::fabs(1 - 2 * theta) * s.dt / e3);
    cols[1].push_back(s.dt * s.dt / e5);
    cols[2].push_back(dx / e3);
  }
  double resid = 0;
  const auto c = nnls_fit(cols, y, &resid);
  rep.coeff = {c[0], c[1], c[2]};
  double ynorm = 0;
  for (double v : y) ynorm += v * v;
  ynorm = std::sqrt(ynorm);
  rep.rel_residual = ynorm > 0 ? resid / ynorm : 0.0;
  const double cmax = std::max({c[0], c[1], c[2]});
  rep.c1_share = cmax > 0 ? c[0] / cmax : 0.0;
  rep.pass = rep.rel_residual <= cfg.fit_tol;
  return rep;
}

BarrierStudyReport barrier_audit_study(const ControlProblem& p,
                                       const BarrierStudyConfig& cfg) {
  if (!p.has_barrier())
    throw ConfigError("barrier study: problem has no barrier");
  if (cfg.nodes_ladder.empty())
    throw ConfigError("barrier study: empty ladder");

  BarrierStudyReport rep;
  const SpaceTimeGrid g0 =
      study_grid(p, cfg.nodes_ladder.front(), cfg.dt_coeff, cfg.dt_power);
  if (cfg.base.run_audits) {
    const auto a1 = audit_A1(p, g0);
    if (!a1.pass)
      throw NumericalError("barrier study: coefficient audit failed");
  }
  rep.a2 = audit_A2(p, g0);
  rep.a3 = audit_A3(p, g0);
  if (!rep.a2.pass)
    throw NumericalError(
        "barrier study: barrier does not dominate the operator (A2)");

  SolverConfig base = cfg.base;
  base.scheme = cfg.scheme;
  base.theta = cfg.theta;
  base.run_audits = false;

  for (int nodes : cfg.nodes_ladder) {
    const SpaceTimeGrid g = study_grid(p, nodes, cfg.dt_coeff, cfg.dt_power);

    double zmax = 0;
    for (int n = 0; n <= g.n_steps; ++n) {
      const double t = g.time(n);
      zmax = std::max(zmax, par::max_reduce(g.num_nodes(), 0.0,
                                            [&](std::int64_t i) {
                                              return p.barrier(t, g.point(static_cast<int>(i))).value;
                                            }));
    }
    const double floor_z = cfg.zeta_floor_rel * zmax;

    double kval = 0, mismatch = 0;
    const auto scan = [&](int level, const std::vector<double>& vals) {
      const double t = g.time(level);
      kval = std::max(kval, par::max_reduce(g.num_nodes(), 0.0,
                                            [&](std::int64_t i) {
        const int node = static_cast<int>(i);
        const Point x = g.point(node);
        const double z = p.barrier(t, x).value;
        if (z <= floor_z) return 0.0;
        return std::fabs(vals[static_cast<std::size_t>(i)] - p.psi1(t, x)) / z;
      }));
      mismatch = std::max(mismatch, par::max_reduce(g.num_nodes(), 0.0,
                                                    [&](std::int64_t i) {
        const int node = static_cast<int>(i);
        const Point x = g.point(node);
        if (p.barrier(t, x).value > floor_z) return 0.0;
        return std::fabs(vals[static_cast<std::size_t>(i)] - p.psi1(t, x));
      }));
    };
    solve(p, g, base, scan);
    check_finite(kval, "barrier constant");

    Rung rung;
    rung.nodes = nodes;
    rung.dx = max_dx(g);
    rung.dt = g.dt;
    rep.rungs.push_back(rung);
    rep.k_per_rung.push_back(kval);
    rep.mismatch_per_rung.push_back(mismatch);
  }

  rep.k_min = *std::min_element(rep.k_per_rung.begin(), rep.k_per_rung.end());
  rep.k_max = *std::max_element(rep.k_per_rung.begin(), rep.k_per_rung.end());
  rep.pass = rep.a2.pass && rep.k_max <= 2 * rep.k_min;
  return rep;
}

SwitchingStudyReport switching_study(const ControlProblem& p,
                                     const SwitchingStudyConfig& cfg) {
  if (cfg.cost_ladder.size() < 2)
    throw ConfigError("switching study: ladder needs at least two costs");
  for (std::size_t i = 0; i + 1 < cfg.cost_ladder.size(); ++i)
    if (!(cfg.cost_ladder[i] > cfg.cost_ladder[i + 1]))
      throw ConfigError("switching study: cost ladder must strictly decrease");
  if (!(cfg.cost_ladder.back() > 0))
    throw ConfigError("switching study: costs must be positive");

  const SpaceTimeGrid g =
      study_grid(p, cfg.nodes, cfg.dt_coeff, cfg.dt_power);

  SolverConfig base = cfg.base;
  std::vector<std::vector<double>> u_levels(
      static_cast<std::size_t>(g.n_steps + 1));
  solve(p, g, base, [&](int level, const std::vector<double>& vals) {
    u_levels[static_cast<std::size_t>(level)] = vals;
  });

  SwitchingStudyReport rep;
  rep.min_feasibility = std::numeric_limits<double>::infinity();
  SwitchingConfig sw;
  sw.mode_controls = cfg.mode_controls;
  sw.base = base;
  sw.base.run_audits = false;

  for (double k : cfg.cost_ladder) {
    sw.switch_cost = k;
    double gap = -std::numeric_limits<double>::infinity();
    double feas = std::numeric_limits<double>::infinity();
    solve_switching(p, g, sw,
                    [&](int level, int /*mode*/,
                        const std::vector<double>& vals) {
      const auto& u = u_levels[static_cast<std::size_t>(level)];
      const double mx = par::max_reduce(
          g.num_nodes(), -std::numeric_limits<double>::infinity(),
          [&](std::int64_t i) {
            return vals[static_cast<std::size_t>(i)] -
                   u[static_cast<std::size_t>(i)];
          });
      const double mn = -par::max_reduce(
          g.num_nodes(), -std::numeric_limits<double>::infinity(),
          [&](std::int64_t i) {
            return u[static_cast<std::size_t>(i)] -
                   vals[static_cast<std::size_t>(i)];
          });
      gap = std::max(gap, mx);
      feas = std::min(feas, mn);
    });
    check_finite(gap, "switching gap");
    rep.costs.push_back(k);
    rep.gaps.push_back(gap);
    rep.min_feasibility = std::min(rep.min_feasibility, feas);
  }

  rep.monotone = true;
  for (std::size_t i = 1; i < rep.gaps.size(); ++i)
    if (rep.gaps[i] > rep.gaps[i - 1] + 1e-9) rep.monotone = false;

  std::vector<double> gs;
  for (double gp : rep.gaps) gs.push_back(std::max(gp, 1e-300));
  rep.fitted_decay = loglog_slope(rep.costs, gs);
  rep.pass = rep.min_feasibility >= -1e-9 && rep.monotone &&
             rep.fitted_decay >= 1.0 / 3 - 0.05;
  return rep;
}

ControlProblem perturb_problem(const ControlProblem& p, PerturbField field,
                               double delta) {
  ControlProblem q = p;
  const int entries = p.dim * p.sigma_cols;
  switch (field) {
    case PerturbField::Sigma:
      q.sigma = [f = p.sigma, delta, entries](int c, double t, const Point& x,
                                              double* out) {
        f(c, t, x, out);
        for (int k = 0; k < entries; ++k) out[k] += delta;
      };
      break;
    case PerturbField::Drift:
      q.drift = [f = p.drift, delta, dim = p.dim](int c, double t,
                                                  const Point& x, double* out) {
        f(c, t, x, out);
        for (int k = 0; k < dim; ++k) out[k] += delta;
      };
      break;
    case PerturbField::Discount:
      q.discount = [f = p.discount, delta](int c, double t, const Point& x) {
        return f(c, t, x) + delta;
      };
      break;
    case PerturbField::Cost:
      q.running_cost = [f = p.running_cost, delta](int c, double t,
                                                   const Point& x) {
        return f(c, t, x) + delta;
      };
      break;
  }
  return q;
}

DependenceReport dependence_probe(const ControlProblem& p,
                                  const DependenceConfig& cfg) {
  if (cfg.deltas.size() < 2)
    throw ConfigError("dependence: need at least two deltas");
  for (double d : cfg.deltas)
    if (!(d > 0)) throw ConfigError("dependence: deltas must be positive");
  if (cfg.fields.empty()) throw ConfigError("dependence: no fields selected");

  const SpaceTimeGrid g = study_grid(p, cfg.nodes, cfg.dt_coeff, cfg.dt_power);

  SolverConfig base = cfg.base;
  std::vector<std::vector<double>> u_levels(
      static_cast<std::size_t>(g.n_steps + 1));
  solve(p, g, base, [&](int level, const std::vector<double>& vals) {
    u_levels[static_cast<std::size_t>(level)] = vals;
  });
  base.run_audits = false;

  DependenceReport rep;
  rep.pass = true;
  for (PerturbField field : cfg.fields) {
    DependenceFieldResult fr;
    fr.field = field;
    fr.required = field == PerturbField::Sigma ? 0.5 - 0.05 : 1.0 - 0.05;
    for (double d : cfg.deltas) {
      const ControlProblem q = perturb_problem(p, field, d);
      double diff = 0;
      solve(q, g, base, [&](int level, const std::vector<double>& vals) {
        const auto& u = u_levels[static_cast<std::size_t>(level)];
        diff = std::max(diff, par::max_reduce(g.num_nodes(), 0.0,
                                              [&](std::int64_t i) {
          return std::fabs(vals[static_cast<std::size_t>(i)] -
                           u[static_cast<std::size_t>(i)]);
        }));
      });
      check_finite(diff, "dependence difference");
      fr.diffs.push_back(std::max(diff, 1e-300));
    }
    fr.fitted_exponent = loglog_slope(cfg.deltas, fr.diffs);
    fr.pass = fr.fitted_exponent >= fr.required;
    rep.pass = rep.pass && fr.pass;
    rep.fields.push_back(std::move(fr));
  }
  return rep;
}

ComparisonStudyReport comparison_bound_study(const ControlProblem& p,
                                             const ComparisonStudyConfig& cfg) {
  if (cfg.deltas.empty()) throw ConfigError("comparison: empty delta ladder");
  for (double d : cfg.deltas)
    if (!(d > 0)) throw ConfigError("comparison: deltas must be positive");

  const SpaceTimeGrid g = study_grid(p, cfg.nodes, cfg.dt_coeff, cfg.dt_power);
  const double T = g.horizon();

  SolverConfig base = cfg.base;
  std::vector<std::vector<double>> u_levels(
      static_cast<std::size_t>(g.n_steps + 1));
  solve(p, g, base, [&](int level, const std::vector<double>& vals) {
    u_levels[static_cast<std::size_t>(level)] = vals;
  });
  base.run_audits = false;

  // Tilt the running cost by +-delta*t; the pair brackets the base run and
  // their gaps are what the comparison bound controls.
  auto tilted = [&](double delta) {
    ControlProblem q = p;
    q.running_cost = [f = p.running_cost, delta](int c, double t,
                                                 const Point& x) {
      return f(c, t, x) + delta * t;
    };
    return q;
  };

  struct Gap {
    double t, d, delta;
  };
  std::vector<Gap> gaps;
  ComparisonStudyReport rep;
  rep.min_ordering = std::numeric_limits<double>::infinity();

  for (double d : cfg.deltas) {
    for (double sign : {1.0, -1.0}) {
      const ControlProblem q = tilted(sign * d);
      std::vector<double> level_gap(static_cast<std::size_t>(g.n_steps + 1),
                                    0.0);
      double order_min = std::numeric_limits<double>::infinity();
      solve(q, g, base, [&](int level, const std::vector<double>& vals) {
        const auto& u = u_levels[static_cast<std::size_t>(level)];
        // upper = run with the larger cost, so upper - lower >= 0.
        const double mx = par::max_reduce(
            g.num_nodes(), -std::numeric_limits<double>::infinity(),
            [&](std::int64_t i) {
              const double du = vals[static_cast<std::size_t>(i)] -
                                u[static_cast<std::size_t>(i)];
              return sign > 0 ? du : -du;
            });
        const double mn = -par::max_reduce(
            g.num_nodes(), -std::numeric_limits<double>::infinity(),
            [&](std::int64_t i) {
              const double du = vals[static_cast<std::size_t>(i)] -
                                u[static_cast<std::size_t>(i)];
              return sign > 0 ? -du : du;
            });
        level_gap[static_cast<std::size_t>(level)] = mx;
        order_min = std::min(order_min, mn);
      });
      rep.min_ordering = std::min(rep.min_ordering, order_min);
      for (int n = 1; n <= g.n_steps; ++n)
        gaps.push_back({g.time(n),
                        level_gap[static_cast<std::size_t>(n)], d});
    }
  }

  auto mu_needed = [&](const Gap& s) {
    const double cap = 2 * s.t * s.delta * T;
    if (!(s.d > cap)) return 0.0;
    return std::log(s.d / cap) / s.t;
  };
  rep.mu = 0;
  for (double d : cfg.deltas) {
    double md = 0;
    for (const auto& s : gaps)
      if (s.delta == d) md = std::max(md, mu_needed(s));
    rep.mu_per_delta.push_back(md);
    rep.mu = std::max(rep.mu, md);
  }
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& s : gaps)
    rep.max_violation =
        std::max(rep.max_violation,
                 s.d - 2 * s.t * std::exp(rep.mu * s.t) * s.delta * T);
  rep.pass = rep.max_violation <= 1e-9 && rep.min_ordering >= -1e-12;
  return rep;
}

BoundaryLayerReport boundary_layer_demo(const BoundaryLayerConfig& cfg) {
  if (!(cfg.dx > 0) ||
      std::fabs(1.0 / cfg.dx - std::llround(1.0 / cfg.dx)) > 1e-9)
    throw ConfigError("boundary layer: dx must divide the unit interval");
  if (!(cfg.safety > 0) || cfg.safety > 1)
    throw ConfigError("boundary layer: safety factor must be in (0, 1]");

  const ControlProblem p = builtin_problem("boundary-layer");
  const double T = p.horizon;
  const int nodes = static_cast<int>(std::llround(1.0 / cfg.dx)) + 1;
  const double nominal = cfg.safety * 16 * cfg.dx * cfg.dx;
  const int steps = std::max(1, static_cast<int>(std::ceil(T / nominal - 1e-12)));
  const double dt = T / steps;
  const SpaceTimeGrid g =
      build_grid({p.lower[0]}, {p.upper[0]}, {nodes}, dt, steps);

  SolverConfig cfg_s;
  cfg_s.scheme = SchemeKind::FiniteDifference;
  cfg_s.theta = 0;

  BoundaryLayerReport rep;
  rep.dx = cfg.dx;
  rep.dt = dt;
  rep.steps = steps;
  rep.min_slack = std::numeric_limits<double>::infinity();

  // Partial-sum lower bound for the first interior node, advanced with the
  // scheme's own dt: B_0 = 1, B_n = (1-2dt) B_{n-1} + (dt/2)(1-dx)^2.
  double bound = 1;
  const double feed = (dt / 2) * (1 - cfg.dx) * (1 - cfg.dx);
  const int first = g.node_of(1);

  const auto res = solve(p, g, cfg_s, [&](int level,
                                          const std::vector<double>& vals) {
    if (level > 0) bound = (1 - 2 * dt) * bound + feed;
    const double u1 = vals[static_cast<std::size_t>(first)];
    rep.times.push_back(g.time(level));
    rep.u1.push_back(u1);
    rep.bound.push_back(bound);
    rep.min_slack = std::min(rep.min_slack, u1 - bound);
  });

  rep.u1_final = rep.u1.back();
  rep.bound_final = rep.bound.back();
  rep.u_mid = interpolate(res.u, Point{0.5, 0});
  rep.interior_err = std::fabs(rep.u_mid - std::exp(-T));
  rep.layer_gap = rep.u1_final - std::exp(-T);
  rep.pass_bound = rep.min_slack >= -1e-12;
  rep.pass_quarter = rep.bound_final > 0.25;
  rep.pass_interior = rep.interior_err <= 0.02;
  rep.pass = rep.pass_bound && rep.pass_quarter && rep.pass_interior;
  return rep;
}

}  // namespace hjb
