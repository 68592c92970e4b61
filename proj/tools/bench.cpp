// Times the hot kernels in serial mode against the OpenMP dispatch and
// checks that both produce bit-identical results (see parallel.hpp for the
// determinism contract).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "hjb/grid.hpp"
#include "hjb/parallel.hpp"
#include "hjb/problem.hpp"
#include "hjb/solver.hpp"

using namespace hjb;

namespace {

struct Case {
  std::string name;
  std::function<std::vector<double>()> run;
};

double time_best(const std::function<std::vector<double>()>& run, int reps,
                 std::vector<double>* out) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    *out = run();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

Case solve_case(const std::string& name, const char* problem,
                std::vector<int> nodes, SchemeKind scheme, double theta,
                double dt_coeff, double dt_power, int steps) {
  auto run = [=]() {
    ControlProblem p = builtin_problem(problem);
    std::vector<double> lo(p.dim), up(p.dim);
    for (int k = 0; k < p.dim; ++k) {
      lo[k] = p.lower[k];
      up[k] = p.upper[k];
    }
    double dx = (up[0] - lo[0]) / (nodes[0] - 1);
    SpaceTimeGrid g = build_grid(lo, up, nodes, dt_coeff * std::pow(dx, dt_power),
                                 steps);
    SolverConfig cfg;
    cfg.scheme = scheme;
    cfg.theta = theta;
    cfg.sl.theta = theta;
    cfg.run_audits = false;
    cfg.check_sup_bound = false;
    return solve(p, g, cfg).u.values;
  };
  return {name, run};
}

Case audit_case(const std::string& name, int nodes, int pairs) {
  auto run = [=]() {
    ControlProblem p = builtin_problem("manufactured-2d");
    std::vector<double> lo{0, 0}, up{1, 1};
    SpaceTimeGrid g = build_grid(lo, up, {nodes, nodes}, 0.01, 10);
    AuditReport rep = audit_A1(p, g, pairs);
    return std::vector<double>{rep.sampled_max,
                               static_cast<double>(rep.sample_count)};
  };
  return {name, run};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timing"};
  int reps = 3;
  bool small = false;
  app.add_option("--reps", reps, "repetitions per case, best time reported");
  app.add_flag("--small", small, "tiny sizes (smoke/CI mode)");
  CLI11_PARSE(app, argc, argv);

  std::vector<Case> cases;
  if (small) {
    cases.push_back(solve_case("kd-explicit-2d-65", "manufactured-2d",
                               {65, 65}, SchemeKind::FiniteDifference, 0,
                               0.125, 2, 10));
    cases.push_back(solve_case("sl-implicit-1d-257", "manufactured-1d", {257},
                               SchemeKind::SemiLagrangian, 1, 1, 1, 10));
    cases.push_back(audit_case("audit-a1-2d-17", 17, 2000));
  } else {
    cases.push_back(solve_case("kd-explicit-2d-257", "manufactured-2d",
                               {257, 257}, SchemeKind::FiniteDifference, 0,
                               0.125, 2, 40));
    cases.push_back(solve_case("sl-implicit-1d-2049", "manufactured-1d",
                               {2049}, SchemeKind::SemiLagrangian, 1, 1, 1,
                               60));
    cases.push_back(solve_case("sl-cn-1d-1025", "manufactured-1d", {1025},
                               SchemeKind::SemiLagrangian, 0.5, 0.4, 1.5, 60));
    cases.push_back(audit_case("audit-a1-2d-33", 33, 10000));
  }

  std::printf("threads=%d reps=%d\n", omp_get_max_threads(), reps);
  std::printf("%-24s %11s %11s %8s  %s\n", "kernel", "serial[ms]",
              "openmp[ms]", "speedup", "identical");
  bool all_equal = true;
  for (const Case& c : cases) {
    std::vector<double> serial, parallel;
    double ts = 0, tp = 0;
    try {
      par::mode() = par::Mode::Serial;
      ts = time_best(c.run, reps, &serial);
      par::mode() = par::Mode::OpenMP;
      tp = time_best(c.run, reps, &parallel);
    } catch (const std::exception& e) {
      par::mode() = par::Mode::OpenMP;
      std::printf("%-24s failed: %s\n", c.name.c_str(), e.what());
      all_equal = false;
      continue;
    }
    bool equal = serial == parallel;
    all_equal = all_equal && equal;
    std::printf("%-24s %11.2f %11.2f %8.2f  %s\n", c.name.c_str(), ts, tp,
                ts / tp, equal ? "yes" : "NO");
  }
  if (!all_equal) {
    std::printf("serial and OpenMP results differ\n");
    return 1;
  }
  return 0;
}
