#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hjb/linalg.hpp"
#include "hjb/problem.hpp"
#include "hjb/scheme_sl.hpp"
#include "hjb/stencil.hpp"

namespace hjb {

enum class SchemeKind { FiniteDifference, SemiLagrangian };

struct SolverConfig {
  SchemeKind scheme = SchemeKind::FiniteDifference;
  double theta = 1.0;  // 0 explicit, 1 implicit, 0.5 Crank-Nicolson
  SLConfig sl;         // wide-stencil options; sl.theta follows theta

  double policy_tol = 1e-10;
  int policy_max_iters = 100;
  double linear_tol = 1e-12;
  int linear_max_iters = 200000;

  // Abort with NumericalError when a level fails the positive-type check
  // (negative off-centre weight or negative explicit coefficient).
  bool require_positive_type = true;
  // Verify the discrete a-priori bound
  //   |U(t)|_inf <= e^(lambda t) (|data|_inf + t |l|_inf),  lambda = sup c+,
  // after every step.
  bool check_sup_bound = true;
  // Run the regularity audit before marching (coefficient Lipschitz
  // estimates); failure raises NumericalError.  Ladder drivers audit once
  // per problem and switch this off for the individual rungs.
  bool run_audits = true;
};

struct SolveDiagnostics {
  PositiveTypeReport positive;
  int policy_sweeps_total = 0;
  int policy_sweeps_max = 0;
  int linear_solves = 0;
  double linear_residual_max = 0;
  bool howard_monotone = true;  // iterates nondecreasing, residuals falling
  double sup_observed = 0;
  double sup_bound = 0;
  double lambda = 0;    // sampled sup of positive discount part
  double cost_sup = 0;  // sampled sup |l|
  std::vector<AuditReport> audits;  // A1 always; A2/A3 when a barrier exists
};

struct SolveResult {
  GridFunction u;               // final time level, boundary nodes included
  std::vector<int> policy;      // maximizing control per interior node
  SolveDiagnostics diag;
};

// Called after each completed level (including level 0) with the full node
// vector of that level.
using LevelCallback =
    std::function<void(int level, const std::vector<double>& values)>;

// Marches the theta-scheme for
//   max_alpha { [1 + th dt cw_n] U^n - th dt sum w_n U^n
//               - [1 - (1-th) dt cw_(n-1)] U^(n-1)
//               - (1-th) dt sum w_(n-1) U^(n-1)
//               - dt l(t_(n-1+th)) } = 0
// from psi0 (or `initial_override`) with lateral data psi1.  Boundary
// targets of clipped stencil legs sample psi0 when the row was assembled at
// level 0 and psi1 otherwise.  Implicit parts are resolved by Howard policy
// iteration; theta = 0 reduces to a pointwise minimum over controls.
SolveResult solve(const ControlProblem& p, const SpaceTimeGrid& g,
                  const SolverConfig& cfg, const LevelCallback& on_level = {},
                  const std::function<double(const Point&)>& initial_override =
                      {});

// A single theta-step, exposed for property tests: advances the full node
// vector `prev` (level n-1, boundary rows included) to level n.  Boundary
// rows of the result carry psi1(t_n); `initial_override` replaces psi0 when
// stencil legs sample the level-0 data.  No a-priori bound checking.
std::vector<double> step(const ControlProblem& p, const SpaceTimeGrid& g,
                         const SolverConfig& cfg, int level_n,
                         const std::vector<double>& prev,
                         const std::function<double(const Point&)>&
                             initial_override = {});

// Policy iteration for  max_alpha (A^alpha x - b^alpha) = 0  over systems in
// SparseRow form.  Improvement takes the row-wise argmax with ties broken
// towards the lowest control index; a frozen policy is solved directly
// (banded LU) when the bandwidth stays small and by Gauss-Seidel otherwise.
// Terminates when the policy repeats and the residual max|A^pi x - b^pi|
// drops to policy_tol; throws NumericalError at the sweep cap.
struct HowardOptions {
  double policy_tol = 1e-10;
  int max_iters = 100;
  double linear_tol = 1e-12;
  int linear_max_iters = 200000;
  int direct_bandwidth_limit = 80;
};

struct HowardReport {
  int improvement_sweeps = 0;
  int linear_solves = 0;
  double residual = 0;
  // Diagnostics of the max-type Howard theory: iterates nondecreasing after
  // the first evaluation, residuals nonincreasing across sweeps.
  double min_increment = 0;
  bool monotone = true;
};

std::vector<double> howard_solve(
    const std::vector<std::vector<SparseRow>>& rows,
    const std::vector<std::vector<double>>& rhs, std::vector<double> x,
    std::vector<int>& policy, const HowardOptions& opt,
    HowardReport* report = nullptr);

// Switching system: one value function per mode, each stepped with its own
// restricted control set, coupled through the obstacle
//   U_i <- min(U_i, min_{j != i} U_j + switch_cost)
// swept in ascending mode order until nothing changes.
struct SwitchingConfig {
  std::vector<std::vector<int>> mode_controls;
  double switch_cost = 0.1;
  SolverConfig base;
};

struct SwitchingResult {
  std::vector<GridFunction> modes;   // final level per mode
  SolveDiagnostics diag;             // aggregated over modes
  int projection_sweeps_max = 0;
};

// Called after each completed (projected) level, once per mode.
using SwitchingLevelCallback = std::function<void(
    int level, int mode, const std::vector<double>& values)>;

SwitchingResult solve_switching(const ControlProblem& p,
                                const SpaceTimeGrid& g,
                                const SwitchingConfig& cfg,
                                const SwitchingLevelCallback& on_level = {});

}  // namespace hjb
