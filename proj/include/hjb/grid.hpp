#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace hjb {

// Spatial point; only the first `dim` slots are meaningful.
using Point = std::array<double, 2>;

// Uniform tensor grid on a box [lower, upper] plus a uniform time ladder
// t_n = n * dt, n = 0..n_steps.  Nodes are flattened x-fastest.
struct SpaceTimeGrid {
  int dim = 1;
  Point lower{};
  Point upper{};
  Point dx{};
  std::array<int, 2> nodes{1, 1};  // nodes per axis (axis >= dim unused -> 1)
  double dt = 0;
  int n_steps = 0;

  int num_nodes() const { return nodes[0] * nodes[1]; }
  int num_interior() const {
    int n = nodes[0] - 2;
    if (dim == 2) n *= nodes[1] - 2;
    return n;
  }

  std::array<int, 2> multi_index(int node) const {
    return {node % nodes[0], node / nodes[0]};
  }
  int node_of(int ix, int iy = 0) const { return ix + nodes[0] * iy; }

  Point point(int node) const {
    auto mi = multi_index(node);
    Point p{};
    for (int k = 0; k < dim; ++k) p[k] = lower[k] + dx[k] * mi[k];
    return p;
  }

  double time(int level) const { return dt * level; }
  double horizon() const { return dt * n_steps; }

  bool is_spatial_boundary(int node) const {
    auto mi = multi_index(node);
    for (int k = 0; k < dim; ++k)
      if (mi[k] == 0 || mi[k] == nodes[k] - 1) return true;
    return false;
  }
  bool is_interior(int node) const { return !is_spatial_boundary(node); }

  // Interior nodes in flat order; cached on first use is unnecessary, the
  // callers build it once per solve.
  std::vector<int> interior_nodes() const;
};

// Builds the grid, validating shapes.  Throws ConfigError on bad input
// (dim not in {1,2}, fewer than 3 nodes per axis, non-positive extents,
// dt <= 0, n_steps < 1).
SpaceTimeGrid build_grid(const std::vector<double>& lower,
                         const std::vector<double>& upper,
                         const std::vector<int>& nodes_per_axis, double dt,
                         int n_steps);

// Distance from x to the boundary of the box (0 on the boundary itself).
// Throws ConfigError if x lies outside the closed box.
double distance_to_boundary(const SpaceTimeGrid& g, const Point& x);

// Values attached to every node of one time slice.
struct GridFunction {
  const SpaceTimeGrid* grid = nullptr;
  int time_level = 0;
  std::vector<double> values;
};

GridFunction make_grid_function(const SpaceTimeGrid& g, int level,
                                double fill = 0.0);

double sup_norm(const GridFunction& f);

// Max difference quotient |f_i - f_j| / dx over grid-adjacent node pairs.
double lipschitz_estimate(const GridFunction& f);

// Multilinear interpolation weights for a point in the closed box: one
// (node, weight) pair per corner of the containing cell, weights >= 0 and
// summing to 1.  Affine functions are reproduced exactly.
using InterpWeights = std::vector<std::pair<int, double>>;
InterpWeights interpolation_weights(const SpaceTimeGrid& g, const Point& x);

double interpolate(const GridFunction& f, const Point& x);

}  // namespace hjb
