#include <cmath>

#include "doctest.h"
#include "hjb/config.hpp"
#include "hjb/errors.hpp"
#include "hjb/solver.hpp"

using namespace hjb;

TEST_SUITE_BEGIN("config");

TEST_CASE("expression problem matches the builtin it re-defines") {
  const char* text = R"json({
    "problem": {
      "name": "m1d-json",
      "controls": [0.5, 1.0],
      "sigma": "pow(2*alpha, 0.5)",
      "cost": "(pow(3.14159265358979312, 2) - 1) * exp(-t) * sin(3.14159265358979312*x1)",
      "initial": "sin(3.14159265358979312*x1)",
      "barrier": {"value": "x1*(1-x1)", "grad": ["1-2*x1"], "hess": ["-2"]},
      "exact": "exp(-t)*sin(3.14159265358979312*x1)"
    },
    "grid": {"nodes": 33},
    "solver": {"scheme": "sl", "theta": 1}
  })json";
  RunConfig rc = parse_config(text);
  CHECK(rc.problem.name == "m1d-json");
  CHECK(rc.problem.has_barrier());
  CHECK(rc.problem.has_exact());

  SpaceTimeGrid g = config_grid(rc);
  CHECK(g.nodes[0] == 33);
  CHECK(g.dt == doctest::Approx(1.0 / 32));

  SolveResult mine = solve(rc.problem, g, rc.solver);
  SolveResult ref = solve(builtin_problem("manufactured-1d"), g, rc.solver);
  for (int i = 0; i < g.num_nodes(); ++i)
    CHECK(mine.u.values[static_cast<std::size_t>(i)] ==
          ref.u.values[static_cast<std::size_t>(i)]);
}

TEST_CASE("solver and study blocks override defaults") {
  const char* text = R"json({
    "problem": "manufactured-1d",
    "seed": 7,
    "grid": {"nodes": [17], "dt": 0.05},
    "solver": {"scheme": "kd", "theta": 0.5, "audits": false},
    "converge": {"nodes": [9, 17, 33], "dt_power": 2},
    "consistency": {"eps": [0.3, 0.15], "smooth_field": true},
    "switching": {"modes": [[0], [0, 1]], "costs": [0.4, 0.2]},
    "dependence": {"fields": ["drift", "cost"], "deltas": [0.01, 0.1]},
    "boundary-layer": {"dx": 0.03125, "safety": 0.5}
  })json";
  RunConfig rc = parse_config(text);
  CHECK(rc.seed == 7);
  CHECK(rc.solver.scheme == SchemeKind::FiniteDifference);
  CHECK(rc.solver.theta == 0.5);
  CHECK(rc.solver.sl.theta == 0.5);
  CHECK(!rc.solver.run_audits);
  // studies inherit the solver block unless they override it
  CHECK(rc.converge.scheme == SchemeKind::FiniteDifference);
  CHECK(rc.converge.theta == 0.5);
  CHECK(!rc.converge.base.run_audits);
  CHECK(rc.converge.nodes_ladder == std::vector<int>{9, 17, 33});
  CHECK(rc.converge.dt_power == 2);
  CHECK(rc.consistency.eps_ladder == std::vector<double>{0.3, 0.15});
  CHECK(rc.consistency.smooth_field);
  CHECK(rc.switching.mode_controls ==
        std::vector<std::vector<int>>{{0}, {0, 1}});
  CHECK(rc.switching.cost_ladder == std::vector<double>{0.4, 0.2});
  CHECK(rc.dependence.fields ==
        std::vector<PerturbField>{PerturbField::Drift, PerturbField::Cost});
  CHECK(rc.boundary_layer.dx == 0.03125);
  CHECK(rc.boundary_layer.safety == 0.5);

  SpaceTimeGrid g = config_grid(rc);
  CHECK(g.dt == doctest::Approx(0.05));
  CHECK(g.n_steps == 20);
}

TEST_CASE("builtin name gives per-control default switching modes") {
  RunConfig rc = load_config("manufactured-1d");
  CHECK(rc.problem.num_controls() == 2);
  CHECK(rc.switching.mode_controls ==
        std::vector<std::vector<int>>{{0}, {1}});
  CHECK(rc.converge.nodes_ladder.size() == 4);
}

TEST_CASE("2d sigma rows are stored column-major") {
  const char* text = R"json({
    "problem": {
      "dim": 2,
      "sigma": [["1", "x1"], ["x2", "2"]],
      "initial": "0"
    }
  })json";
  RunConfig rc = parse_config(text);
  CHECK(rc.problem.sigma_cols == 2);
  double s[4];
  rc.problem.sigma(0, 0.0, {0.25, 0.75}, s);
  CHECK(s[0] == 1.0);    // column 0: (sigma_11, sigma_21)
  CHECK(s[1] == 0.75);
  CHECK(s[2] == 0.25);   // column 1: (sigma_12, sigma_22)
  CHECK(s[3] == 2.0);
}

TEST_CASE("malformed configs throw ConfigError") {
  const char* bads[] = {
      "{",
      "[1]",
      "{\"problem\": 3}",
      "{\"problem\": \"nope\"}",
      "{\"problem\": {\"initial\": \"sin(\"}}",
      "{\"problem\": {\"initial\": \"x1\"}, \"typo\": 1}",
      "{\"problem\": {\"initial\": \"x1\", \"dim\": 3}}",
      "{\"problem\": {\"initial\": \"x1\", \"horizon\": -1}}",
      "{\"problem\": {\"initial\": \"x1\", \"sigma\": [[\"1\"],[\"1\"]]}}",
      "{\"problem\": {\"initial\": \"x1\", "
      "\"domain\": {\"lower\": [1], \"upper\": [0]}}}",
      "{\"problem\": \"manufactured-1d\", "
      "\"switching\": {\"modes\": [[0],[9]]}}",
      "{\"problem\": \"manufactured-1d\", \"solver\": {\"theta\": 2}}",
      "{\"problem\": \"manufactured-1d\", "
      "\"dependence\": {\"fields\": [\"volatility\"]}}",
      "{\"problem\": {}}",
  };
  for (const char* b : bads) {
    CAPTURE(b);
    CHECK_THROWS_AS(parse_config(b), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/no/such/file.json"), ConfigError);
  CHECK_THROWS_AS(load_config("not-a-problem"), ConfigError);
}

TEST_CASE("name helpers round-trip") {
  CHECK(scheme_from_name("kd") == SchemeKind::FiniteDifference);
  CHECK(scheme_from_name("fd") == SchemeKind::FiniteDifference);
  CHECK(scheme_from_name("sl") == SchemeKind::SemiLagrangian);
  CHECK_THROWS_AS(scheme_from_name("xx"), ConfigError);
  CHECK(std::string(scheme_name(SchemeKind::SemiLagrangian)) == "sl");
  for (auto f : {PerturbField::Sigma, PerturbField::Drift,
                 PerturbField::Discount, PerturbField::Cost})
    CHECK(field_from_name(field_name(f)) == f);
  CHECK_THROWS_AS(field_from_name("volatility"), ConfigError);
}

TEST_SUITE_END();
