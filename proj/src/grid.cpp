#include "hjb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjb/errors.hpp"

namespace hjb {

std::vector<int> SpaceTimeGrid::interior_nodes() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(num_interior()));
  for (int n = 0; n < num_nodes(); ++n)
    if (is_interior(n)) out.push_back(n);
  return out;
}

SpaceTimeGrid build_grid(const std::vector<double>& lower,
                         const std::vector<double>& upper,
                         const std::vector<int>& nodes_per_axis, double dt,
                         int n_steps) {
  const std::size_t dim = lower.size();
  if (dim < 1 || dim > 2)
    throw ConfigError("grid: spatial dimension must be 1 or 2");
  if (upper.size() != dim || nodes_per_axis.size() != dim)
    throw ConfigError("grid: lower/upper/nodes shape mismatch");
  if (!(dt > 0)) throw ConfigError("grid: dt must be positive");
  if (n_steps < 1) throw ConfigError("grid: need at least one time step");

  SpaceTimeGrid g;
  g.dim = static_cast<int>(dim);
  g.dt = dt;
  g.n_steps = n_steps;
  for (std::size_t k = 0; k < dim; ++k) {
    if (!(upper[k] > lower[k]))
      throw ConfigError("grid: upper must exceed lower on every axis");
    if (nodes_per_axis[k] < 3)
      throw ConfigError("grid: need at least 3 nodes per axis");
    g.lower[k] = lower[k];
    g.upper[k] = upper[k];
    g.nodes[k] = nodes_per_axis[k];
    g.dx[k] = (upper[k] - lower[k]) / (nodes_per_axis[k] - 1);
  }
  return g;
}

double distance_to_boundary(const SpaceTimeGrid& g, const Point& x) {
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.dim; ++k) {
    const double lo = x[k] - g.lower[k];
    const double hi = g.upper[k] - x[k];
    if (lo < 0 || hi < 0)
      throw ConfigError("distance_to_boundary: point outside the domain");
    d = std::min(d, std::min(lo, hi));
  }
  return d;
}

GridFunction make_grid_function(const SpaceTimeGrid& g, int level,
                                double fill) {
  GridFunction f;
  f.grid = &g;
  f.time_level = level;
  f.values.assign(static_cast<std::size_t>(g.num_nodes()), fill);
  return f;
}

double sup_norm(const GridFunction& f) {
  double m = 0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

double lipschitz_estimate(const GridFunction& f) {
  const SpaceTimeGrid& g = *f.grid;
  double m = 0;
  for (int n = 0; n < g.num_nodes(); ++n) {
    auto mi = g.multi_index(n);
    if (mi[0] + 1 < g.nodes[0])
      m = std::max(m, std::abs(f.values[n + 1] - f.values[n]) / g.dx[0]);
    if (g.dim == 2 && mi[1] + 1 < g.nodes[1])
      m = std::max(
          m, std::abs(f.values[n + g.nodes[0]] - f.values[n]) / g.dx[1]);
  }
  return m;
}

InterpWeights interpolation_weights(const SpaceTimeGrid& g, const Point& x) {
  std::array<int, 2> base{0, 0};
  std::array<double, 2> frac{0, 0};
  for (int k = 0; k < g.dim; ++k) {
    if (x[k] < g.lower[k] || x[k] > g.upper[k])
      throw ConfigError("interpolate: point outside the domain");
    const double s = (x[k] - g.lower[k]) / g.dx[k];
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, g.nodes[k] - 2);
    base[k] = i;
    frac[k] = std::clamp(s - i, 0.0, 1.0);
  }

  InterpWeights w;
  const int corners = 1 << g.dim;
  w.reserve(static_cast<std::size_t>(corners));
  for (int m = 0; m < corners; ++m) {
    double weight = 1;
    std::array<int, 2> idx = base;
    for (int k = 0; k < g.dim; ++k) {
      const bool hi = (m >> k) & 1;
      weight *= hi ? frac[k] : 1 - frac[k];
      idx[k] += hi ? 1 : 0;
    }
    w.emplace_back(g.node_of(idx[0], idx[1]), weight);
  }
  return w;
}

double interpolate(const GridFunction& f, const Point& x) {
  double v = 0;
  for (const auto& [node, weight] : interpolation_weights(*f.grid, x))
    v += weight * f.values[static_cast<std::size_t>(node)];
  return v;
}

}  // namespace hjb
