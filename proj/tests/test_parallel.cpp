#include <vector>

#include "doctest.h"
#include "hjb/grid.hpp"
#include "hjb/parallel.hpp"
#include "hjb/problem.hpp"
#include "hjb/rng.hpp"
#include "hjb/solver.hpp"

using namespace hjb;

namespace {

struct ModeGuard {
  par::Mode saved = par::mode();
  ~ModeGuard() { par::mode() = saved; }
};

std::vector<double> solve_values(const char* problem, std::vector<int> nodes,
                                 SchemeKind scheme, double theta, double dt,
                                 int steps) {
  ControlProblem p = builtin_problem(problem);
  std::vector<double> lo(p.dim), up(p.dim);
  for (int k = 0; k < p.dim; ++k) {
    lo[k] = p.lower[k];
    up[k] = p.upper[k];
  }
  SpaceTimeGrid g = build_grid(lo, up, nodes, dt, steps);
  SolverConfig cfg;
  cfg.scheme = scheme;
  cfg.theta = theta;
  cfg.sl.theta = theta;
  cfg.run_audits = false;
  return solve(p, g, cfg).u.values;
}

}  // namespace

TEST_SUITE_BEGIN("parallel");

TEST_CASE("for_each writes the same slots in both modes") {
  ModeGuard guard;
  std::vector<double> a(1000), b(1000);
  par::mode() = par::Mode::Serial;
  par::for_each(1000, [&](std::int64_t i) { a[static_cast<std::size_t>(i)] = 0.5 * i; });
  par::mode() = par::Mode::OpenMP;
  par::for_each(1000, [&](std::int64_t i) { b[static_cast<std::size_t>(i)] = 0.5 * i; });
  CHECK(a == b);
}

TEST_CASE("max_reduce agrees with a plain loop") {
  ModeGuard guard;
  Rng rng(11);
  std::vector<double> data(4097);
  for (auto& v : data) v = rng.uniform(-5, 5);
  double plain = -1e300;
  for (double v : data) plain = std::max(plain, v);
  for (par::Mode m : {par::Mode::Serial, par::Mode::OpenMP}) {
    par::mode() = m;
    double got = par::max_reduce(
        static_cast<std::int64_t>(data.size()), -1e300,
        [&](std::int64_t i) { return data[static_cast<std::size_t>(i)]; });
    CHECK(got == plain);
  }
}

TEST_CASE("argmax tie-break picks the lowest index in both modes") {
  ModeGuard guard;
  std::vector<double> data(2000, 0.0);
  data[700] = 3.0;
  data[701] = 3.0;
  data[1500] = 3.0;
  for (par::Mode m : {par::Mode::Serial, par::Mode::OpenMP}) {
    par::mode() = m;
    auto got = par::argmax_reduce(
        static_cast<std::int64_t>(data.size()),
        [&](std::int64_t i) { return data[static_cast<std::size_t>(i)]; });
    CHECK(got.index == 700);
    CHECK(got.value == 3.0);
  }
}

TEST_CASE("solves are bit-identical in serial and OpenMP mode") {
  ModeGuard guard;
  struct Run {
    const char* problem;
    std::vector<int> nodes;
    SchemeKind scheme;
    double theta, dt;
    int steps;
  };
  const Run runs[] = {
      {"manufactured-1d", {65}, SchemeKind::SemiLagrangian, 1.0, 1.0 / 64, 64},
      {"manufactured-1d", {33}, SchemeKind::FiniteDifference, 0.0,
       1.0 / (4 * 32.0 * 32), 40},
      {"manufactured-2d", {17, 17}, SchemeKind::FiniteDifference, 0.0,
       1.0 / (8 * 16.0 * 16), 30},
      {"boundary-layer", {33}, SchemeKind::FiniteDifference, 0.0,
       0.9 * 16.0 / (32.0 * 32), 25},
  };
  for (const Run& r : runs) {
    CAPTURE(r.problem);
    par::mode() = par::Mode::Serial;
    auto serial = solve_values(r.problem, r.nodes, r.scheme, r.theta, r.dt,
                               r.steps);
    par::mode() = par::Mode::OpenMP;
    auto parallel = solve_values(r.problem, r.nodes, r.scheme, r.theta, r.dt,
                                 r.steps);
    CHECK(serial == parallel);
  }
}

TEST_CASE("audit is bit-identical in both modes") {
  ModeGuard guard;
  ControlProblem p = builtin_problem("manufactured-1d");
  SpaceTimeGrid g = build_grid({0}, {1}, {17}, 0.05, 20);
  par::mode() = par::Mode::Serial;
  AuditReport serial = audit_A1(p, g, 2000);
  par::mode() = par::Mode::OpenMP;
  AuditReport parallel = audit_A1(p, g, 2000);
  CHECK(serial.sampled_max == parallel.sampled_max);
  CHECK(serial.sample_count == parallel.sample_count);
}

TEST_SUITE_END();
