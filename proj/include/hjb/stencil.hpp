#pragma once

#include <utility>
#include <vector>

#include "hjb/grid.hpp"

namespace hjb {

// One assembled row of the spatial operator for one control at one node:
//
//   L_h[phi](center) = center_weight * phi(x_center)
//                      - sum_i weight_i * phi(target_i)
//                      - constant
//
// which discretizes  -tr[a D^2 phi] - b.D phi - c phi - l  at x_center.
// Targets are either grid nodes or exact points on the spatial boundary
// (from stencil legs clipped at the domain edge); boundary points carry
// their coordinates so Dirichlet data can be sampled exactly.  A scheme of
// positive type has every weight_i >= 0.
struct StencilRow {
  int center = -1;
  int control = 0;
  double time = 0;  // assembly time of the coefficients
  double center_weight = 0;
  double constant = 0;
  double discount = 0;  // c at the node; center_weight already carries -c
  std::vector<std::pair<int, double>> node_terms;
  std::vector<std::pair<Point, double>> boundary_terms;
};

// Sorts node targets by index and combines duplicates (a drift leg can land
// on a diffusion neighbour); downstream consumers may then assume one term
// per target node.
void merge_node_terms(StencilRow& row);

// Applies the row to an arbitrary function given by node values plus an
// evaluator for off-node boundary points.  Used by tests and probes.
template <class BoundaryFn>
double apply_row(const StencilRow& row, const std::vector<double>& values,
                 const SpaceTimeGrid& g, BoundaryFn&& boundary_value) {
  (void)g;
  double s = row.center_weight * values[static_cast<std::size_t>(row.center)];
  for (const auto& [node, w] : row.node_terms)
    s -= w * values[static_cast<std::size_t>(node)];
  for (const auto& [pt, w] : row.boundary_terms) s -= w * boundary_value(pt);
  return s - row.constant;
}

// Result of the positive-type check: every off-centre weight must be
// nonnegative, and on every row the explicit-part coefficient
//   1 - (1-theta)*dt*(center_weight + c+)
// must stay nonnegative (the positive discount part is not credited, which
// makes the bound conservative).  Reports the minimal slack seen; on failure
// worst_node/worst_control identify the first violating row.
struct PositiveTypeReport {
  bool pass = true;
  double min_off_weight = 0;
  double min_explicit_coeff = 1;
  int worst_node = -1;
  int worst_control = -1;
};

PositiveTypeReport check_positive_type(const std::vector<StencilRow>& rows,
                                       double dt, double theta);

}  // namespace hjb
