#pragma once

#include "hjb/problem.hpp"
#include "hjb/stencil.hpp"

namespace hjb {

struct SLConfig {
  double theta = 1.0;
  // Wide-stencil step h_s; 0 means "use the smallest spatial spacing".
  double stencil_step = 0;
  // Optional constant for the dt = C (1-theta) dx^{3/2} convenience rule
  // used by ladder drivers; the binding bound always comes from the rows.
  double cfl_constant = 0;

  double step(const SpaceTimeGrid& g) const {
    if (stencil_step > 0) return stencil_step;
    return g.dim == 2 ? std::min(g.dx[0], g.dx[1]) : g.dx[0];
  }
};

// Semi-Lagrangian wide-stencil row: for every column sigma_j the pair of
// points x +- sqrt(h_s) sigma_j carries a second difference (weights
// 1/(2 h_s), centre -1/h_s), and the drift point x + h_s b carries a first
// difference (weight 1/h_s).  Off-grid points are written back onto the
// grid through multilinear interpolation.  Legs leaving the domain are
// shortened to the exact boundary intersection: a pair with distances
// (d+, d-) gets the asymmetric second-difference weights
// 2/(d+(d+ + d-)), 2/(d-(d+ + d-)) and centre 2/(d+ d-), all scaled by
// |sigma_j|^2 / 2; a shortened drift leg of length d gets weight |b|/d.
StencilRow assemble_sl(const ControlProblem& p, const SpaceTimeGrid& g,
                       double t, int ctrl, int node, const SLConfig& cfg);

// Largest dt with 1 - (1-theta)*dt*(center_weight + c+) >= 0 on every row,
// swept over interior nodes, controls and a set of coefficient sample
// times.  Returns +infinity for theta = 1 or when no row binds.  Scales
// like dx^(3/2) when boundary-clipped legs dominate.
double cfl_bound(const ControlProblem& p, const SpaceTimeGrid& g,
                 const SLConfig& cfg, int time_samples = 17);

// Consistency error model C*K*(|1-2theta| dt eps^-3 + dt^2 eps^-5
//                              + dx eps^-3).
double consistency_error_model(double dt, double dx, double eps, double theta,
                               double K, double C = 1.0);

}  // namespace hjb
