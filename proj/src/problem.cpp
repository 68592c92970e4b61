#include "hjb/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hjb/errors.hpp"
#include "hjb/parallel.hpp"
#include "hjb/rng.hpp"

namespace hjb {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Refined spatial sampling lattice used by the audits.  Time levels are
// capped so audits stay cheap on solves with very many steps.
struct FineLattice {
  int dim = 1;
  std::array<int, 2> m{1, 1};
  Point lo{}, hi{}, dxf{};
  double T = 0;
  int levels = 1;
  double dtf = 0;

  int num() const { return m[0] * m[1]; }
  Point point(int idx) const {
    Point p{};
    const int ix = idx % m[0], iy = idx / m[0];
    p[0] = lo[0] + dxf[0] * ix;
    if (dim == 2) p[1] = lo[1] + dxf[1] * iy;
    // Snap the last node onto the face so boundary checks are exact.
    if (ix == m[0] - 1) p[0] = hi[0];
    if (dim == 2 && iy == m[1] - 1) p[1] = hi[1];
    return p;
  }
  bool is_boundary(int idx) const {
    const int ix = idx % m[0], iy = idx / m[0];
    if (ix == 0 || ix == m[0] - 1) return true;
    return dim == 2 && (iy == 0 || iy == m[1] - 1);
  }
};

FineLattice make_lattice(const SpaceTimeGrid& g, int refinement,
                         int max_time_levels = 65) {
  FineLattice f;
  f.dim = g.dim;
  f.T = g.horizon();
  for (int k = 0; k < g.dim; ++k) {
    f.m[k] = (g.nodes[k] - 1) * refinement + 1;
    f.lo[k] = g.lower[k];
    f.hi[k] = g.upper[k];
    f.dxf[k] = (g.upper[k] - g.lower[k]) / (f.m[k] - 1);
  }
  f.levels = std::min(g.n_steps * refinement, max_time_levels - 1) + 1;
  f.dtf = f.T / (f.levels - 1);
  return f;
}

double sq(double v) { return v * v; }

}  // namespace

void ControlProblem::diffusion(int ctrl, double t, const Point& x,
                               double* a) const {
  double s[4] = {0, 0, 0, 0};
  sigma(ctrl, t, x, s);
  a[0] = a[1] = a[2] = a[3] = 0;
  for (int col = 0; col < sigma_cols; ++col) {
    const double s1 = s[col * dim + 0];
    const double s2 = dim == 2 ? s[col * dim + 1] : 0.0;
    a[0] += 0.5 * s1 * s1;
    if (dim == 2) {
      a[1] += 0.5 * s1 * s2;
      a[3] += 0.5 * s2 * s2;
    }
  }
  a[2] = a[1];
}

// ---------------------------------------------------------------------------
// Built-in problems
// ---------------------------------------------------------------------------

ControlProblem builtin_problem(const std::string& name) {
  ControlProblem p;
  p.name = name;

  if (name == "manufactured-1d") {
    // Two-control problem with exact solution u = e^{-t} sin(pi x); the
    // optimum sits at alpha = 1 wherever u >= 0, i.e. everywhere.
    p.dim = 1;
    p.horizon = 1;
    p.lower = {0, 0};
    p.upper = {1, 0};
    p.controls = {0.5, 1.0};
    p.sigma_cols = 1;
    p.sigma = [p2 = p.controls](int ctrl, double, const Point&, double* s) {
      s[0] = std::sqrt(2.0 * p2[ctrl]);
    };
    p.drift = [](int, double, const Point&, double* b) { b[0] = 0; };
    p.discount = [](int, double, const Point&) { return 0.0; };
    p.running_cost = [](int, double t, const Point& x) {
      return (kPi * kPi - 1.0) * std::exp(-t) * std::sin(kPi * x[0]);
    };
    p.psi0 = [](const Point& x) { return std::sin(kPi * x[0]); };
    p.psi1 = [](double, const Point&) { return 0.0; };
    p.barrier = [](double, const Point& x) {
      BarrierEval z;
      z.value = x[0] * (1 - x[0]);
      z.grad[0] = 1 - 2 * x[0];
      z.hess[0] = -2;
      z.time_deriv = 0;
      return z;
    };
    p.exact = [](double t, const Point& x) {
      return std::exp(-t) * std::sin(kPi * x[0]);
    };
    return p;
  }

  if (name == "boundary-layer") {
    // u_t - 0.5 x^2 (1-x)^2 u_xx + u = 0 with data identically 1; the
    // solution develops a boundary layer and converges to e^{-t} inside,
    // but not uniformly up to the boundary.  No barrier exists.
    p.dim = 1;
    p.horizon = 2;
    p.lower = {0, 0};
    p.upper = {1, 0};
    p.controls = {0.0};
    p.sigma_cols = 1;
    p.sigma = [](int, double, const Point& x, double* s) {
      s[0] = x[0] * (1 - x[0]);
    };
    p.drift = [](int, double, const Point&, double* b) { b[0] = 0; };
    p.discount = [](int, double, const Point&) { return -1.0; };
    p.running_cost = [](int, double, const Point&) { return 0.0; };
    p.psi0 = [](const Point&) { return 1.0; };
    p.psi1 = [](double, const Point&) { return 1.0; };
    return p;
  }

  if (name == "manufactured-2d") {
    // Diagonally dominant two-control problem with exact solution
    // u = e^{-t} sin(pi x) sin(pi y).  The per-control source terms differ
    // by a nonnegative gap that vanishes on the optimal control, so the
    // optimal policy switches across the diagonal ridge sin(pi x)=sin(pi y).
    p.dim = 2;
    p.horizon = 0.5;
    p.lower = {0, 0};
    p.upper = {1, 1};
    p.controls = {0.5, 1.0};
    p.sigma_cols = 2;
    const double s22 = std::sqrt(15.0) / 4.0;  // chol of [[1,.25],[.25,1]]
    p.sigma = [labels = p.controls, s22](int ctrl, double, const Point&,
                                         double* s) {
      const double f = std::sqrt(2.0 * labels[ctrl]);
      s[0] = f;         // column 1
      s[1] = 0.25 * f;
      s[2] = 0;         // column 2
      s[3] = s22 * f;
    };
    p.drift = [](int, double, const Point&, double* b) { b[0] = b[1] = 0; };
    p.discount = [](int, double, const Point&) { return 0.0; };
    p.running_cost = [labels = p.controls](int ctrl, double t,
                                           const Point& x) {
      const double a = labels[ctrl];
      const double sx = std::sin(kPi * x[0]), sy = std::sin(kPi * x[1]);
      const double cc = std::cos(kPi * x[0]) * std::cos(kPi * x[1]);
      const double et = std::exp(-t);
      const double gap = ctrl == 0 ? std::max(0.0, sx - sy)
                                   : std::max(0.0, sy - sx);
      return et * ((2 * a * kPi * kPi - 1) * sx * sy -
                   0.5 * a * kPi * kPi * cc) +
             gap;
    };
    p.psi0 = [](const Point& x) {
      return std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
    };
    p.psi1 = [](double, const Point&) { return 0.0; };
    p.exact = [](double t, const Point& x) {
      return std::exp(-t) * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
    };
    return p;
  }

  if (name == "degenerate-drift") {
    // Pure transport with outward drift b = alpha (x - 1/2): every control
    // pushes mass towards the nearest face, so the exponential-in-time
    // barrier 2 e^{3t} x(1-x) satisfies the barrier inequality.
    p.dim = 1;
    p.horizon = 1;
    p.lower = {0, 0};
    p.upper = {1, 0};
    p.controls = {1.0, 2.0};
    p.sigma_cols = 1;
    p.sigma = [](int, double, const Point&, double* s) { s[0] = 0; };
    p.drift = [labels = p.controls](int ctrl, double, const Point& x,
                                    double* b) {
      b[0] = labels[ctrl] * (x[0] - 0.5);
    };
    p.discount = [](int, double, const Point&) { return 0.0; };
    p.running_cost = [](int, double, const Point&) { return 0.0; };
    p.psi0 = [](const Point& x) { return x[0] * (1 - x[0]); };
    p.psi1 = [](double, const Point&) { return 0.0; };
    p.barrier = [](double t, const Point& x) {
      BarrierEval z;
      const double e = 2.0 * std::exp(3.0 * t);
      z.value = e * x[0] * (1 - x[0]);
      z.grad[0] = e * (1 - 2 * x[0]);
      z.hess[0] = -2 * e;
      z.time_deriv = 3 * e * x[0] * (1 - x[0]);
      return z;
    };
    return p;
  }

  throw ConfigError("unknown builtin problem '" + name + "'");
}

// ---------------------------------------------------------------------------
// Parabolic norm sampling
// ---------------------------------------------------------------------------

Norm1Estimate parabolic_norm_estimate(
    const std::function<void(double t, const Point&, double* out)>& field,
    int components, const SpaceTimeGrid& g, int refinement, int random_pairs,
    std::uint64_t seed, bool spatial_only) {
  FineLattice f = make_lattice(g, refinement);
  if (spatial_only) {
    f.levels = 1;
    f.dtf = 0;
  }
  const int n = f.num();
  const int K = components;

  std::vector<double> cur(static_cast<std::size_t>(n) * K);
  std::vector<double> prev;

  auto fill = [&](double t, std::vector<double>& out) {
    par::for_each(n, [&](std::int64_t i) {
      field(t, f.point(static_cast<int>(i)), &out[static_cast<std::size_t>(i) * K]);
    });
  };

  Norm1Estimate est;
  par::Scored best{-kInf, -1};
  int best_level = 0;

  // Candidates per node: one spatial neighbour per axis plus the time pair.
  const int kinds = f.dim + 1;
  for (int lvl = 0; lvl < f.levels; ++lvl) {
    const double t = lvl * f.dtf;
    fill(t, cur);

    est.sup = std::max(
        est.sup, par::max_reduce(static_cast<std::int64_t>(n) * K, 0.0,
                                 [&](std::int64_t i) { return std::abs(cur[i]); }));

    auto quotient = [&](std::int64_t c) -> double {
      const int idx = static_cast<int>(c) / kinds;
      const int kind = static_cast<int>(c) % kinds;
      const int ix = idx % f.m[0], iy = idx / f.m[0];
      if (kind < f.dim) {
        const int stride = kind == 0 ? 1 : f.m[0];
        const bool has = kind == 0 ? ix + 1 < f.m[0] : iy + 1 < f.m[1];
        if (!has) return -kInf;
        double d2 = 0;
        for (int k = 0; k < K; ++k)
          d2 += sq(cur[static_cast<std::size_t>(idx + stride) * K + k] -
                   cur[static_cast<std::size_t>(idx) * K + k]);
        return std::sqrt(d2) / f.dxf[kind];
      }
      if (lvl == 0) return -kInf;
      double d2 = 0;
      for (int k = 0; k < K; ++k)
        d2 += sq(cur[static_cast<std::size_t>(idx) * K + k] -
                 prev[static_cast<std::size_t>(idx) * K + k]);
      return std::sqrt(d2) / std::sqrt(f.dtf);
    };

    auto sc = par::argmax_reduce(static_cast<std::int64_t>(n) * kinds, quotient);
    if (sc.value > best.value) {
      best = sc;
      best_level = lvl;
    }
    prev = cur;
  }

  if (best.index >= 0 && best.value > -kInf) {
    est.seminorm = best.value;
    est.witness_t = best_level * f.dtf;
    est.witness_x = f.point(static_cast<int>(best.index) / kinds);
  }

  // Seeded random pairs sharpen the estimate beyond grid-aligned offsets.
  if (random_pairs > 0) {
    Rng rng(seed);
    std::vector<double> va(K), vb(K);
    for (int r = 0; r < random_pairs; ++r) {
      Point xa{}, xb{};
      for (int k = 0; k < f.dim; ++k) {
        xa[k] = rng.uniform(f.lo[k], f.hi[k]);
        xb[k] = rng.uniform(f.lo[k], f.hi[k]);
      }
      const double ta = spatial_only ? 0.0 : rng.uniform(0.0, f.T);
      const double tb = spatial_only ? 0.0 : rng.uniform(0.0, f.T);
      double dx2 = 0;
      for (int k = 0; k < f.dim; ++k) dx2 += sq(xa[k] - xb[k]);
      const double dist = std::sqrt(dx2) + std::sqrt(std::abs(ta - tb));
      if (dist < 1e-12) continue;
      field(ta, xa, va.data());
      field(tb, xb, vb.data());
      double d2 = 0;
      for (int k = 0; k < K; ++k) d2 += sq(va[k] - vb[k]);
      const double q = std::sqrt(d2) / dist;
      if (q > est.seminorm) {
        est.seminorm = q;
        est.witness_t = ta;
        est.witness_x = xa;
      }
    }
  }
  return est;
}

// ---------------------------------------------------------------------------
// audit_A1
// ---------------------------------------------------------------------------

AuditReport audit_A1(const ControlProblem& p, const SpaceTimeGrid& g,
                     int random_pairs, std::uint64_t seed) {
  AuditReport rep;
  rep.assumption = "A1";

  struct Piece {
    const char* key;
    int components;
    bool spatial_only;
    std::function<void(double, const Point&, double*)> field;
  };

  std::vector<Piece> pieces;
  pieces.push_back({"psi0", 1, true, [&](double, const Point& x, double* out) {
                      out[0] = p.psi0(x);
                    }});

  const int M = p.num_controls();
  const int sc = p.dim * p.sigma_cols;
  for (int c = 0; c < M; ++c) {
    pieces.push_back({"sigma", sc, false,
                      [&, c](double t, const Point& x, double* out) {
                        p.sigma(c, t, x, out);
                      }});
    pieces.push_back({"drift", p.dim, false,
                      [&, c](double t, const Point& x, double* out) {
                        p.drift(c, t, x, out);
                      }});
    pieces.push_back({"discount", 1, false,
                      [&, c](double t, const Point& x, double* out) {
                        out[0] = p.discount(c, t, x);
                      }});
    pieces.push_back({"cost", 1, false,
                      [&, c](double t, const Point& x, double* out) {
                        out[0] = p.running_cost(c, t, x);
                      }});
  }

  double worst_growth = 1.0;
  double psi0_semi = 0;
  std::map<std::string, double> coeff_n1;  // max over controls of |.|_1
  bool finite = true;
  double best_quotient = -kInf;

  {
    const FineLattice f4 = make_lattice(g, 4);
    rep.sample_count = static_cast<std::int64_t>(pieces.size()) *
                       (static_cast<std::int64_t>(f4.num()) * f4.levels +
                        random_pairs);
  }

  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& piece = pieces[i];
    Norm1Estimate e2 = parabolic_norm_estimate(piece.field, piece.components,
                                               g, 2, 0, seed,
                                               piece.spatial_only);
    Norm1Estimate e4 = parabolic_norm_estimate(piece.field, piece.components,
                                               g, 4, random_pairs, seed,
                                               piece.spatial_only);
    if (!std::isfinite(e4.sup) || !std::isfinite(e4.seminorm)) finite = false;
    if (e2.seminorm > 1e-9 * (1 + e4.sup))
      worst_growth = std::max(worst_growth, e4.seminorm / e2.seminorm);

    if (std::string(piece.key) == "psi0") {
      psi0_semi = e4.seminorm;
    } else {
      auto& slot = coeff_n1[piece.key];
      slot = std::max(slot, e4.sup + e4.seminorm);
    }
    if (e4.seminorm > best_quotient) {
      best_quotient = e4.seminorm;
      rep.witness_t = e4.witness_t;
      rep.witness_x = e4.witness_x;
    }
  }

  double c0 = psi0_semi;
  for (const auto& [key, v] : coeff_n1) {
    c0 += v;
    rep.details[std::string(key) + "_n1"] = v;
  }
  rep.details["psi0_seminorm"] = psi0_semi;
  rep.details["growth_ratio"] = worst_growth;
  rep.details["C0"] = c0;
  rep.sampled_max = c0;
  rep.pass = finite && std::isfinite(c0) && worst_growth <= 1.25;
  return rep;
}

// ---------------------------------------------------------------------------
// audit_A2
// ---------------------------------------------------------------------------

namespace {

double barrier_lhs(const ControlProblem& p, int ctrl, double t,
                   const Point& x, const BarrierEval& z) {
  double a[4], b[2] = {0, 0};
  p.diffusion(ctrl, t, x, a);
  p.drift(ctrl, t, x, b);
  double lhs = -z.time_deriv + p.discount(ctrl, t, x) * z.value;
  for (int k = 0; k < p.dim; ++k) lhs += b[k] * z.grad[k];
  lhs += a[0] * z.hess[0];
  if (p.dim == 2) lhs += a[1] * z.hess[1] + a[2] * z.hess[2] + a[3] * z.hess[3];
  return lhs;
}

}  // namespace

AuditReport audit_A2(const ControlProblem& p, const SpaceTimeGrid& g,
                     int random_samples, std::uint64_t seed) {
  if (!p.has_barrier())
    throw ConfigError("audit_A2: problem has no barrier function");

  AuditReport rep;
  rep.assumption = "A2";

  FineLattice f = make_lattice(g, 4);
  const int n = f.num();
  const int M = p.num_controls();

  double max_lhs = -kInf;
  double min_zeta = kInf;
  double max_bnd = 0;
  std::int64_t count = 0;

  // Interior inequality and positivity, over controls x (0,T] x interior.
  for (int lvl = 1; lvl < f.levels; ++lvl) {
    const double t = lvl * f.dtf;
    for (int c = 0; c < M; ++c) {
      auto sc = par::argmax_reduce(n, [&](std::int64_t i) -> double {
        if (f.is_boundary(static_cast<int>(i))) return -kInf;
        const Point x = f.point(static_cast<int>(i));
        return barrier_lhs(p, c, t, x, p.barrier(t, x));
      });
      if (sc.value > max_lhs) {
        max_lhs = sc.value;
        rep.witness_t = t;
        rep.witness_x = f.point(static_cast<int>(sc.index));
        rep.witness_ctrl = c;
      }
    }
    min_zeta = std::min(
        min_zeta,
        -par::max_reduce(n, -kInf, [&](std::int64_t i) -> double {
          if (f.is_boundary(static_cast<int>(i))) return -kInf;
          return -p.barrier(t, f.point(static_cast<int>(i))).value;
        }));
    max_bnd = std::max(
        max_bnd, par::max_reduce(n, 0.0, [&](std::int64_t i) -> double {
          if (!f.is_boundary(static_cast<int>(i))) return 0.0;
          return std::abs(p.barrier(t, f.point(static_cast<int>(i))).value);
        }));
    count += static_cast<std::int64_t>(n) * M;
  }

  // Seeded off-lattice samples.
  Rng rng(seed);
  for (int r = 0; r < random_samples; ++r) {
    Point x{};
    for (int k = 0; k < p.dim; ++k) x[k] = rng.uniform(f.lo[k], f.hi[k]);
    const double t = rng.uniform(1e-9, f.T);
    const BarrierEval z = p.barrier(t, x);
    min_zeta = std::min(min_zeta, z.value);
    for (int c = 0; c < M; ++c) {
      const double lhs = barrier_lhs(p, c, t, x, z);
      if (lhs > max_lhs) {
        max_lhs = lhs;
        rep.witness_t = t;
        rep.witness_x = x;
        rep.witness_ctrl = c;
      }
    }
    ++count;
  }

  rep.sample_count = count;
  rep.sampled_max = max_lhs;
  rep.details["min_zeta_interior"] = min_zeta;
  rep.details["max_abs_zeta_lateral"] = max_bnd;
  rep.pass = max_lhs <= -1 + 1e-8 && min_zeta > 0 && max_bnd <= 1e-10;
  return rep;
}

// ---------------------------------------------------------------------------
// audit_A3
// ---------------------------------------------------------------------------

AuditReport audit_A3(const ControlProblem& p, const SpaceTimeGrid& g) {
  if (!p.has_barrier())
    throw ConfigError("audit_A3: problem has no barrier function");

  AuditReport rep;
  rep.assumption = "A3";

  FineLattice f = make_lattice(g, 4);
  const int n = f.num();

  std::vector<double> mismatch(static_cast<std::size_t>(n));
  std::vector<double> zeta0(static_cast<std::size_t>(n));
  par::for_each(n, [&](std::int64_t i) {
    const Point x = f.point(static_cast<int>(i));
    mismatch[i] = std::abs(p.psi0(x) - p.psi1(0.0, x));
    zeta0[i] = p.barrier(0.0, x).value;
  });

  double zsup = par::max_reduce(n, 0.0, [&](std::int64_t i) { return zeta0[i]; });
  const double floor = 1e-8 * std::max(zsup, 1e-300);

  auto sc = par::argmax_reduce(n, [&](std::int64_t i) -> double {
    return zeta0[i] > floor ? mismatch[i] / zeta0[i] : -kInf;
  });
  double c1 = std::max(sc.value, 0.0);

  // Where the barrier (numerically) vanishes the data must match outright.
  const double worst_thin = par::max_reduce(n, 0.0, [&](std::int64_t i) {
    return zeta0[i] > floor ? 0.0 : mismatch[i];
  });
  bool ok = worst_thin <= 1e-10;
  if (!ok) c1 = kInf;

  rep.sample_count = n;
  rep.sampled_max = c1;
  if (sc.index >= 0) {
    rep.witness_t = 0;
    rep.witness_x = f.point(static_cast<int>(sc.index));
  }
  rep.details["C1"] = c1;
  rep.details["zeta0_floor"] = floor;
  rep.details["mismatch_on_thin_barrier"] = worst_thin;
  rep.pass = ok && std::isfinite(c1);
  return rep;
}

// ---------------------------------------------------------------------------
// smooth_initial_data
// ---------------------------------------------------------------------------

SmoothedInitial smooth_initial_data(const ControlProblem& p,
                                    const SpaceTimeGrid& g, double eps) {
  if (!(eps > 0) || !(eps < 1))
    throw ConfigError("smooth_initial_data: eps must lie in (0,1)");
  if (!p.has_barrier())
    throw ConfigError("smooth_initial_data: problem has no barrier function");

  AuditReport a3 = audit_A3(p, g);
  if (!a3.pass)
    throw NumericalError(
        "smooth_initial_data: initial and boundary data are incompatible "
        "with the barrier (no finite C1)");
  const double c1 = a3.details.at("C1");

  // |C1 * zeta|_1 controls the clipping width.
  auto zfield = [&](double t, const Point& x, double* out) {
    out[0] = c1 * p.barrier(t, x).value;
  };
  Norm1Estimate zn = parabolic_norm_estimate(zfield, 1, g, 4, 2000);
  const double L1 = zn.sup + zn.seminorm;
  const double clip = 2 * L1 * eps;

  // Shifted, clipped, zero-extended initial data.  Everything is captured
  // by value so the returned callable owns its state.
  const int dim = p.dim;
  const Point lower = p.lower, upper = p.upper;
  auto psi0 = p.psi0;
  auto psi1 = p.psi1;
  auto psi_hat = [=](const Point& y) -> double {
    for (int k = 0; k < dim; ++k)
      if (y[k] < lower[k] || y[k] > upper[k]) return 0.0;
    const double v = psi0(y) - psi1(0.0, y);
    if (v > clip) return v - clip;
    if (v < -clip) return v + clip;
    return 0.0;
  };

  // Midpoint tensor quadrature of the compact bump, normalized discretely
  // so constants are reproduced exactly and the Lipschitz bound is kept.
  constexpr int Q = 32;
  struct QPoint {
    Point z;
    double w;
  };
  std::vector<QPoint> quad;
  double mass = 0;
  const int qn = p.dim == 2 ? Q * Q : Q;
  for (int q = 0; q < qn; ++q) {
    Point z{};
    z[0] = -1 + (q % Q + 0.5) * (2.0 / Q);
    if (p.dim == 2) z[1] = -1 + (q / Q + 0.5) * (2.0 / Q);
    const double r2 = sq(z[0]) + sq(z[1]);
    if (r2 >= 1) continue;
    const double w = std::exp(-1.0 / (1.0 - r2));
    quad.push_back({z, w});
    mass += w;
  }
  for (auto& qp : quad) qp.w /= mass;

  auto psi_eps = [=](const Point& x) -> double {
    double s = 0;
    for (const QPoint& qp : quad) {
      Point y = x;
      for (int k = 0; k < dim; ++k) y[k] -= eps * qp.z[k];
      s += qp.w * psi_hat(y);
    }
    return s + psi1(0.0, x);
  };

  // Measure the advertised properties on a refined lattice.
  FineLattice f = make_lattice(g, 4);
  const int n = f.num();
  std::vector<double> pe(static_cast<std::size_t>(n)), p0(static_cast<std::size_t>(n));
  par::for_each(n, [&](std::int64_t i) {
    const Point x = f.point(static_cast<int>(i));
    pe[i] = psi_eps(x);
    p0[i] = p.psi0(x);
  });

  const double sup_diff = par::max_reduce(
      n, 0.0, [&](std::int64_t i) { return std::abs(pe[i] - p0[i]); });

  auto lattice_lip = [&](const std::vector<double>& v) {
    return par::max_reduce(n, 0.0, [&](std::int64_t i) -> double {
      const int ix = static_cast<int>(i) % f.m[0], iy = static_cast<int>(i) / f.m[0];
      double q = 0;
      if (ix + 1 < f.m[0]) q = std::abs(v[i + 1] - v[i]) / f.dxf[0];
      if (f.dim == 2 && iy + 1 < f.m[1])
        q = std::max(q, std::abs(v[i + f.m[0]] - v[i]) / f.dxf[1]);
      return q;
    });
  };
  const double lip_eps = lattice_lip(pe);
  const double lip_psi0 = lattice_lip(p0);

  // The construction vanishes (after removing psi1) within eps of the edge.
  const double near_edge = par::max_reduce(n, 0.0, [&](std::int64_t i) -> double {
    const Point x = f.point(static_cast<int>(i));
    double d = kInf;
    for (int k = 0; k < f.dim; ++k)
      d = std::min(d, std::min(x[k] - f.lo[k], f.hi[k] - x[k]));
    if (d > eps) return 0.0;
    return std::abs(pe[i] - p.psi1(0.0, x));
  });

  SmoothedInitial out;
  out.psi_eps = psi_eps;
  out.report["eps"] = eps;
  out.report["sup_diff"] = sup_diff;
  out.report["lip_psi_eps"] = lip_eps;
  out.report["lip_psi0"] = lip_psi0;
  out.report["clip"] = clip;
  out.report["zeta_l1"] = L1;
  out.report["c1"] = c1;
  out.report["bound"] = (lip_psi0 + 2 * L1) * eps;
  out.report["near_edge_max"] = near_edge;
  return out;
}

}  // namespace hjb
