#include "hjb/scheme_sl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjb/errors.hpp"
#include "hjb/parallel.hpp"

namespace hjb {

namespace {

struct Leg {
  double len = 0;      // arclength from the centre to the target
  Point target{};      // clipped endpoint
  bool truncated = false;
};

// Shortens the segment x -> x+v at the first face it crosses.  The binding
// coordinate is snapped onto the face exactly; the others are clamped into
// the box to absorb rounding.
Leg clip_leg(const SpaceTimeGrid& g, const Point& x, const Point& v) {
  double norm2 = 0;
  for (int k = 0; k < g.dim; ++k) norm2 += v[k] * v[k];
  const double vnorm = std::sqrt(norm2);

  double s = 1.0;
  int axis = -1;
  for (int k = 0; k < g.dim; ++k) {
    if (v[k] > 0) {
      const double sk = (g.upper[k] - x[k]) / v[k];
      if (sk < s) {
        s = sk;
        axis = k;
      }
    } else if (v[k] < 0) {
      const double sk = (g.lower[k] - x[k]) / v[k];
      if (sk < s) {
        s = sk;
        axis = k;
      }
    }
  }

  Leg leg;
  leg.truncated = axis >= 0;
  if (s < 0) s = 0;
  for (int k = 0; k < g.dim; ++k)
    leg.target[k] =
        std::clamp(x[k] + s * v[k], g.lower[k], g.upper[k]);
  if (axis >= 0)
    leg.target[axis] = v[axis] > 0 ? g.upper[axis] : g.lower[axis];
  leg.len = s * vnorm;
  return leg;
}

void add_target(StencilRow& row, const SpaceTimeGrid& g, const Leg& leg,
                double w) {
  if (w == 0) return;
  if (leg.truncated) {
    row.boundary_terms.emplace_back(leg.target, w);
    return;
  }
  for (const auto& [node, wn] : interpolation_weights(g, leg.target)) {
    const double ww = w * wn;
    if (ww == 0) continue;
    if (node == row.center)
      row.center_weight -= ww;  // self-term folds into the centre
    else
      row.node_terms.emplace_back(node, ww);
  }
}

}  // namespace

StencilRow assemble_sl(const ControlProblem& p, const SpaceTimeGrid& g,
                       double t, int ctrl, int node, const SLConfig& cfg) {
  if (!g.is_interior(node))
    throw ConfigError("assemble_sl: rows exist only at interior nodes");
  const double hs = cfg.step(g);
  if (!(hs > 0)) throw ConfigError("assemble_sl: stencil step must be > 0");

  StencilRow row;
  row.center = node;
  row.control = ctrl;
  row.time = t;

  const Point x = g.point(node);
  const double root = std::sqrt(hs);

  double sig[4] = {0, 0, 0, 0};  // dim x sigma_cols, column-major
  p.sigma(ctrl, t, x, sig);
  for (int j = 0; j < p.sigma_cols; ++j) {
    Point v{};
    double col2 = 0;
    for (int k = 0; k < g.dim; ++k) {
      const double sk = sig[j * g.dim + k];
      v[k] = root * sk;
      col2 += sk * sk;
    }
    if (col2 == 0) continue;
    Point vneg{};
    for (int k = 0; k < g.dim; ++k) vneg[k] = -v[k];
    const Leg plus = clip_leg(g, x, v);
    const Leg minus = clip_leg(g, x, vneg);
    const double dp = plus.len, dm = minus.len;
    add_target(row, g, plus, col2 / (dp * (dp + dm)));
    add_target(row, g, minus, col2 / (dm * (dp + dm)));
    row.center_weight += col2 / (dp * dm);
  }

  double b[2] = {0, 0};
  p.drift(ctrl, t, x, b);
  double bnorm2 = 0;
  for (int k = 0; k < g.dim; ++k) bnorm2 += b[k] * b[k];
  if (bnorm2 > 0) {
    const double bnorm = std::sqrt(bnorm2);
    Point v{};
    for (int k = 0; k < g.dim; ++k) v[k] = hs * b[k];
    const Leg leg = clip_leg(g, x, v);
    const double w = bnorm / leg.len;
    add_target(row, g, leg, w);
    row.center_weight += w;
  }

  row.discount = p.discount(ctrl, t, x);
  row.center_weight -= row.discount;
  row.constant = p.running_cost(ctrl, t, x);
  merge_node_terms(row);
  return row;
}

double cfl_bound(const ControlProblem& p, const SpaceTimeGrid& g,
                 const SLConfig& cfg, int time_samples) {
  const double inf = std::numeric_limits<double>::infinity();
  if (cfg.theta >= 1) return inf;
  if (time_samples < 1) time_samples = 1;

  // The explicit part samples coefficients at levels 0 .. n_steps-1; sweep
  // an evenly spaced subset of those levels.
  const int last = g.n_steps - 1;
  const int count = std::min(time_samples, g.n_steps);
  const auto interior = g.interior_nodes();
  const auto n = static_cast<std::int64_t>(interior.size());

  // Binding quantity per row: center_weight plus the positive discount part
  // (which the centre weight subtracted); positive c is not credited.
  double cw_max = -inf;
  for (int s = 0; s < count; ++s) {
    const int level =
        count == 1 ? 0 : static_cast<int>(std::llround(double(s) * last /
                                                       (count - 1)));
    const double t = g.time(level);
    for (int ctrl = 0; ctrl < p.num_controls(); ++ctrl) {
      cw_max = par::max_reduce(n, cw_max, [&](std::int64_t i) {
        const StencilRow row = assemble_sl(
            p, g, t, ctrl, interior[static_cast<std::size_t>(i)], cfg);
        return row.center_weight + std::max(row.discount, 0.0);
      });
    }
  }
  if (!(cw_max > 0)) return inf;

  double dt = 1.0 / ((1.0 - cfg.theta) * cw_max);
  while (1.0 - (1.0 - cfg.theta) * dt * cw_max < 0)
    dt = std::nextafter(dt, 0.0);
  return dt;
}

double consistency_error_model(double dt, double dx, double eps, double theta,
                               double K, double C) {
  if (!(dt > 0) || !(dx > 0) || !(eps > 0))
    throw ConfigError("consistency_error_model: dt, dx, eps must be > 0");
  if (!(K > 0) || !(C > 0))
    throw ConfigError("consistency_error_model: K and C must be > 0");
  const double e3 = eps * eps * eps;
  const double e5 = e3 * eps * eps;
  return C * K *
         (std::abs(1 - 2 * theta) * dt / e3 + dt * dt / e5 + dx / e3);
}

}  // namespace hjb
