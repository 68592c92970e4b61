#pragma once

#include <array>
#include <string>
#include <vector>

#include "hjb/problem.hpp"
#include "hjb/solver.hpp"

namespace hjb {

// Theoretical error-order window for each scheme/theta combination,
// exponents in dt and dx for both the lower (guaranteed) and upper
// (best-case) bound side.
struct OrderBounds {
  double dt_lower = 0, dx_lower = 0;
  double dt_upper = 0, dx_upper = 0;
};
OrderBounds theoretical_orders(SchemeKind scheme, double theta);

// Least-squares slope of log y against log x.  Requires equal sizes, at
// least two points and strictly positive data.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Small nonnegative least squares by exhaustive support search (meant for a
// handful of columns).  Returns coefficients >= 0; optionally the l2
// residual of the fit.
std::vector<double> nnls_fit(const std::vector<std::vector<double>>& columns,
                             const std::vector<double>& y,
                             double* residual = nullptr);

// ---------------------------------------------------------------------------
// Convergence ladders
// ---------------------------------------------------------------------------

struct Rung {
  int nodes = 0;
  double dx = 0, dt = 0;
  double err_global = 0, err_interior = 0;
};

struct ConvergenceConfig {
  SchemeKind scheme = SchemeKind::SemiLagrangian;
  double theta = 1;
  std::vector<int> nodes_ladder;       // nodes per axis, strictly increasing
  double dt_coeff = 1, dt_power = 1;   // dt = coeff*dx^power, snapped onto T
  int reference_refine = 4;            // reference grid factor without exact
  double interior_margin = 0.1;        // d(x) > margin defines "interior"
  double order_tol = 0.05;             // pass if fit >= required - tol
  double monotone_factor = 1.1;        // errors may wobble up by this factor
  SolverConfig base;                   // scheme/theta fields are overridden
};

struct ConvergenceReport {
  std::string scheme_id;  // "kd" or "sl"
  double theta = 0;
  std::vector<Rung> rungs;
  OrderBounds bounds;
  double fitted_order_global = 0;
  double fitted_order_interior = 0;
  double required_order = 0;  // min(dt_lower*dt_power, dx_lower)
  bool monotone = false;
  bool pass = false;
};

// Solves the ladder and fits the global/interior sup-norm error order at
// the final time against the exact solution (or a refined reference run).
// The fit uses the last three rungs.
ConvergenceReport convergence_study(const ControlProblem& p,
                                    const ConvergenceConfig& cfg);

// ---------------------------------------------------------------------------
// Consistency probe
// ---------------------------------------------------------------------------

struct ConsistencyConfig {
  SchemeKind scheme = SchemeKind::SemiLagrangian;
  double theta = 1;
  std::vector<double> eps_ladder = {0.4, 0.2, 0.1};
  std::vector<double> dt_factors = {1, 0.5, 0.25};  // dt = factor*dx
  int nodes = 129;
  int quadrature = 32;   // mollifier midpoints per axis
  double fit_tol = 0.15;
  bool smooth_field = false;  // probe a smooth profile instead of the kink
  double x0_rel = 0.53;       // kink anchor, relative box coordinates
  double t0_rel = 0.41;
};

struct ConsistencySample {
  double eps = 0, dt = 0;
  double measured = 0;  // max |phi_t + F(phi) - S(phi)| over the probe set
};

struct ConsistencyReport {
  std::vector<ConsistencySample> samples;
  // Nonnegative coefficients on |1-2theta|*dt/eps^3, dt^2/eps^5, dx/eps^3.
  std::array<double, 3> coeff{};
  double rel_residual = 0;
  double c1_share = 0;  // coeff[0] relative to the largest coefficient
  bool pass = false;
};

// Applies the scheme to mollifications of a Lipschitz kink (or a smooth
// profile) and fits the measured truncation against the three-term error
// model.  Probes interior nodes with d(x) > eps at a few time levels.
ConsistencyReport consistency_probe(const ControlProblem& p,
                                    const ConsistencyConfig& cfg);

// ---------------------------------------------------------------------------
// Barrier study
// ---------------------------------------------------------------------------

struct BarrierStudyConfig {
  SchemeKind scheme = SchemeKind::SemiLagrangian;
  double theta = 1;
  std::vector<int> nodes_ladder = {33, 65, 129};
  double dt_coeff = 1, dt_power = 1;
  double zeta_floor_rel = 1e-6;  // exclude nodes with zeta below this * max
  SolverConfig base;
};

struct BarrierStudyReport {
  AuditReport a2, a3;
  std::vector<Rung> rungs;               // dx/dt bookkeeping per rung
  std::vector<double> k_per_rung;        // max |u - psi1| / zeta
  std::vector<double> mismatch_per_rung; // max |u - psi1| where zeta ~ 0
  double k_min = 0, k_max = 0;
  bool pass = false;  // A2 holds and K stable within a factor 2
};

// Measures the barrier constant K with |u_h - psi1| <= K*zeta over the
// space-time grid, per rung of a refinement ladder.
BarrierStudyReport barrier_audit_study(const ControlProblem& p,
                                       const BarrierStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Switching-cost study
// ---------------------------------------------------------------------------

struct SwitchingStudyConfig {
  SolverConfig base;
  std::vector<std::vector<int>> mode_controls;
  std::vector<double> cost_ladder = {0.2, 0.1, 0.05, 0.025};
  int nodes = 65;
  double dt_coeff = 1, dt_power = 1;
};

struct SwitchingStudyReport {
  std::vector<double> costs;
  std::vector<double> gaps;       // sup over modes/levels/nodes of v_i - u_h
  double min_feasibility = 0;     // min of v_i - u_h (>= -1e-9 required)
  double fitted_decay = 0;
  bool monotone = false;
  bool pass = false;
};

// Solves the switching system against the full-control solve on the same
// grid for every switching cost in the (strictly decreasing) ladder.
SwitchingStudyReport switching_study(const ControlProblem& p,
                                     const SwitchingStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Continuous dependence
// ---------------------------------------------------------------------------

enum class PerturbField { Sigma, Drift, Discount, Cost };

// Returns a copy of the problem with +delta added entrywise to the chosen
// coefficient field.
ControlProblem perturb_problem(const ControlProblem& p, PerturbField field,
                               double delta);

struct DependenceConfig {
  SolverConfig base;
  int nodes = 65;
  double dt_coeff = 1, dt_power = 1;
  std::vector<double> deltas = {1e-3, 1e-2, 1e-1};
  std::vector<PerturbField> fields = {PerturbField::Sigma,
                                      PerturbField::Drift,
                                      PerturbField::Discount,
                                      PerturbField::Cost};
};

struct DependenceFieldResult {
  PerturbField field{};
  std::vector<double> diffs;  // sup |u - u_perturbed| per delta
  double fitted_exponent = 0;
  double required = 0;  // 0.45 for sigma, 0.95 for the linear fields
  bool pass = false;
};

struct DependenceReport {
  std::vector<DependenceFieldResult> fields;
  bool pass = false;
};

DependenceReport dependence_probe(const ControlProblem& p,
                                  const DependenceConfig& cfg);

// Sub/supersolution pairs from ell +- delta*t perturbations: fits the
// smallest mu >= 0 with
//   u1 - u2 <= 2 t e^(mu t) |(g1-g2)+|_inf
// across the delta ladder and rechecks the bound with it.
struct ComparisonStudyConfig {
  SolverConfig base;
  int nodes = 65;
  double dt_coeff = 1, dt_power = 1;
  std::vector<double> deltas = {1e-3, 1e-2, 1e-1};
};

struct ComparisonStudyReport {
  double mu = 0;
  std::vector<double> mu_per_delta;
  double max_violation = 0;  // of the bound with the fitted mu
  double min_ordering = 0;   // min of (u_plus - u) and (u - u_minus)
  bool pass = false;
};

ComparisonStudyReport comparison_bound_study(const ControlProblem& p,
                                             const ComparisonStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Boundary-layer demonstration
// ---------------------------------------------------------------------------

struct BoundaryLayerConfig {
  double dx = 1.0 / 64;
  double safety = 0.99;  // dt = safety*16*dx^2, snapped onto T = 2
};

struct BoundaryLayerReport {
  double dx = 0, dt = 0;
  int steps = 0;
  std::vector<double> times, u1, bound;  // per time level
  double u1_final = 0, bound_final = 0;
  double min_slack = 0;      // min over levels of u1 - bound
  double u_mid = 0;          // U(T, 0.5)
  double interior_err = 0;   // |U(T,0.5) - e^{-T}|
  double layer_gap = 0;      // u1_final - e^{-T}
  bool pass_bound = false, pass_quarter = false, pass_interior = false;
  bool pass = false;
};

// Runs the explicit scheme for the degenerate boundary-layer problem to
// T=2 and tracks the partial-sum lower bound
//   B_n = sum_{m<n} (1-2dt)^m (dt/2)(1-dx)^2 + (1-2dt)^n,
// which U^n_1 must dominate exactly (1e-12 slack): the inequality is a
// statement about the scheme's own arithmetic.
BoundaryLayerReport boundary_layer_demo(const BoundaryLayerConfig& cfg);

}  // namespace hjb
