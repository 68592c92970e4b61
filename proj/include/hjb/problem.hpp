#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hjb/grid.hpp"

namespace hjb {

// Barrier function data at one (t, x): the audits need first and second
// spatial derivatives plus the time derivative, so the evaluator supplies
// them analytically rather than by differencing.
struct BarrierEval {
  double value = 0;
  double time_deriv = 0;
  Point grad{};
  std::array<double, 4> hess{};  // row-major dim x dim block
};

// A controlled parabolic problem on a box:
//
//   u_t + sup_alpha { -tr[a Du^2] - b.Du - c u - l } = 0   in (0,T] x Omega
//   u = psi0 at t = 0,  u = psi1 on the lateral boundary,
//   a = 0.5 sigma sigma^T,  sigma is dim x sigma_cols.
//
// Evaluators receive the control as an index into `controls`; the label
// value itself is what JSON-file problems see as `alpha`.
struct ControlProblem {
  std::string name;
  int dim = 1;
  double horizon = 1;
  Point lower{};
  Point upper{};
  std::vector<double> controls{0.0};
  int sigma_cols = 1;

  std::function<void(int ctrl, double t, const Point&, double* sigma)> sigma;
  std::function<void(int ctrl, double t, const Point&, double* b)> drift;
  std::function<double(int ctrl, double t, const Point&)> discount;
  std::function<double(int ctrl, double t, const Point&)> running_cost;
  std::function<double(const Point&)> psi0;
  std::function<double(double t, const Point&)> psi1;
  std::function<BarrierEval(double t, const Point&)> barrier;  // optional
  std::function<double(double t, const Point&)> exact;         // optional

  bool has_barrier() const { return static_cast<bool>(barrier); }
  bool has_exact() const { return static_cast<bool>(exact); }

  int num_controls() const { return static_cast<int>(controls.size()); }

  // a = 0.5 sigma sigma^T, written as [a11, a12, a21, a22] (dim x dim).
  void diffusion(int ctrl, double t, const Point& x, double* a) const;
};

// Built-in problems: "manufactured-1d", "manufactured-2d", "boundary-layer",
// "degenerate-drift".  Throws ConfigError on unknown names.
ControlProblem builtin_problem(const std::string& name);

// Outcome of one assumption audit.  `sampled_max` is the audited quantity
// (the constant estimate for A1/A3, the inequality left-hand side for A2).
struct AuditReport {
  std::string assumption;
  double sampled_max = 0;
  std::int64_t sample_count = 0;
  bool pass = false;
  double witness_t = 0;
  Point witness_x{};
  int witness_ctrl = -1;
  std::map<std::string, double> details;
};

// Regularity audit: estimates the Lipschitz/Hoelder data constant
//   C0 = [psi0]_1 + max_alpha(|sigma|_1 + |b|_1 + |c|_1 + |l|_1)
// by difference quotients in the parabolic distance |x-y| + |t-s|^(1/2),
// sampled on 2x and 4x refinements of the grid plus seeded random pairs.
// Fails when an estimate is non-finite or keeps growing under refinement
// (ratio above 1.25), which is how a non-Lipschitz coefficient shows up.
AuditReport audit_A1(const ControlProblem& p, const SpaceTimeGrid& g,
                     int random_pairs = 10000, std::uint64_t seed = 20240801);

// Barrier audit: checks, by sampling over controls x (0,T] x Omega,
//   -zeta_t + b.Dzeta + tr[a Dzeta^2] + c zeta <= -1   (within 1e-8),
// that zeta > 0 inside and zeta = 0 on the lateral boundary (within 1e-10).
AuditReport audit_A2(const ControlProblem& p, const SpaceTimeGrid& g,
                     int random_samples = 4000,
                     std::uint64_t seed = 20240802);

// Compatibility audit: finds the smallest C1 with
//   |psi0 - psi1(0,.)| <= C1 * zeta(0,.)
// and fails when no finite C1 works (mismatch where the barrier vanishes).
AuditReport audit_A3(const ControlProblem& p, const SpaceTimeGrid& g);

// Mollified initial data construction: subtract psi1(0,.), clip by
// 2*|scaled zeta|_1*eps, extend by zero, convolve with a compactly
// supported spatial bump at scale eps, and add psi1(0,.) back.  The result
// vanishes where distance_to_boundary(x) <= eps and deviates from psi0 by
// at most (C0 + 2|zeta|_1)*eps without increasing the Lipschitz constant.
struct SmoothedInitial {
  std::function<double(const Point&)> psi_eps;
  std::map<std::string, double> report;
};
SmoothedInitial smooth_initial_data(const ControlProblem& p,
                                    const SpaceTimeGrid& g, double eps);

// Shared helper: sup norm and parabolic Lipschitz seminorm of a vector
// field sampled on a refined sub-grid (see audit_A1).  Exposed because the
// smoothing construction reuses it for the barrier.
struct Norm1Estimate {
  double sup = 0;
  double seminorm = 0;
  double witness_t = 0;
  Point witness_x{};
};
Norm1Estimate parabolic_norm_estimate(
    const std::function<void(double t, const Point&, double* out)>& field,
    int components, const SpaceTimeGrid& g, int refinement,
    int random_pairs = 0, std::uint64_t seed = 20240803,
    bool spatial_only = false);

}  // namespace hjb
