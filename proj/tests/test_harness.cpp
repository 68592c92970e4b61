#include <cmath>
#include <vector>

#include "doctest.h"
#include "hjb/errors.hpp"
#include "hjb/harness.hpp"
#include "hjb/problem.hpp"
#include "hjb/solver.hpp"

using namespace hjb;

TEST_SUITE_BEGIN("harness");

TEST_CASE("order-bound table") {
  OrderBounds kd = theoretical_orders(SchemeKind::FiniteDifference, 0.0);
  CHECK(kd.dt_lower == 0.1);
  CHECK(kd.dx_lower == 0.2);
  CHECK(kd.dt_upper == 0.25);
  CHECK(kd.dx_upper == 0.5);
  // the table does not depend on theta for the narrow stencil
  OrderBounds kd1 = theoretical_orders(SchemeKind::FiniteDifference, 1.0);
  CHECK(kd1.dx_lower == kd.dx_lower);

  OrderBounds sl0 = theoretical_orders(SchemeKind::SemiLagrangian, 0.0);
  OrderBounds sl1 = theoretical_orders(SchemeKind::SemiLagrangian, 1.0);
  CHECK(sl0.dt_lower == 0.1);
  CHECK(sl0.dx_lower == 0.1);
  CHECK(sl0.dt_upper == 0.25);
  CHECK(sl0.dx_upper == 0.25);
  CHECK(sl1.dt_lower == sl0.dt_lower);

  OrderBounds cn = theoretical_orders(SchemeKind::SemiLagrangian, 0.5);
  CHECK(cn.dt_lower == 0.125);
  CHECK(cn.dx_lower == 0.1);
  CHECK(cn.dt_upper == doctest::Approx(1.0 / 3));
  CHECK(cn.dx_upper == 0.25);

  CHECK_THROWS_AS(theoretical_orders(SchemeKind::SemiLagrangian, -0.1),
                  ConfigError);
}

TEST_CASE("log-log slope fits exact powers") {
  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(loglog_slope({0.5, 0.25, 0.125}, {2, 4, 8}) ==
        doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope({1, 2}, {1}), ConfigError);
  CHECK_THROWS_AS(loglog_slope({1}, {1}), ConfigError);
  CHECK_THROWS_AS(loglog_slope({1, 2}, {1, -1}), ConfigError);
  CHECK_THROWS_AS(loglog_slope({1, 1}, {1, 2}), ConfigError);
}

TEST_CASE("nonnegative least squares") {
  double resid = 0;
  std::vector<double> c = nnls_fit({{1, 0, 1}}, {2, 0, 2}, &resid);
  CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(resid == doctest::Approx(0.0));

  // the unconstrained optimum wants a negative weight on the second column;
  // the cone fit must drop it instead
  c = nnls_fit({{1, 0}, {0, 1}}, {1, -0.2}, &resid);
  CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c[1] == 0.0);
  CHECK(resid == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS(nnls_fit({}, {1}, nullptr), ConfigError);
  CHECK_THROWS_AS(nnls_fit({{1, 2}, {1}}, {1, 2}, nullptr), ConfigError);
  CHECK_THROWS_AS(nnls_fit({{}}, {}, nullptr), ConfigError);
}

TEST_CASE("convergence ladder on the 1d closed-form problem") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ConvergenceConfig cfg;
  cfg.scheme = SchemeKind::SemiLagrangian;
  cfg.theta = 1;
  cfg.nodes_ladder = {17, 33, 65};
  ConvergenceReport rep = convergence_study(p, cfg);
  CHECK(rep.scheme_id == "sl");
  CHECK(rep.required_order == doctest::Approx(0.1));
  REQUIRE(rep.rungs.size() == 3);
  CHECK(rep.rungs[0].err_global == doctest::Approx(2.7778e-2).epsilon(0.01));
  CHECK(rep.rungs[1].err_global == doctest::Approx(2.2558e-2).epsilon(0.01));
  CHECK(rep.rungs[2].err_global == doctest::Approx(7.6583e-3).epsilon(0.01));
  CHECK(rep.rungs[2].dt == doctest::Approx(1.0 / 64));
  CHECK(rep.fitted_order_global > 0.85);
  CHECK(rep.fitted_order_global < 1.05);
  CHECK(rep.monotone);
  CHECK(rep.pass);
  // interior error should not exceed the global one
  for (const Rung& r : rep.rungs) CHECK(r.err_interior <= r.err_global + 1e-15);
}

TEST_CASE("convergence ladder with a reference run instead of a formula") {
  ControlProblem p = builtin_problem("manufactured-1d");
  p.exact = nullptr;
  ConvergenceConfig cfg;
  cfg.scheme = SchemeKind::SemiLagrangian;
  cfg.theta = 1;
  cfg.nodes_ladder = {9, 17, 33};
  cfg.reference_refine = 4;
  ConvergenceReport rep = convergence_study(p, cfg);
  CHECK(rep.pass);
  CHECK(rep.fitted_order_global > 0.5);

  cfg.reference_refine = 1;
  CHECK_THROWS_AS(convergence_study(p, cfg), ConfigError);
}

TEST_CASE("convergence ladder for the explicit narrow scheme") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ConvergenceConfig cfg;
  cfg.scheme = SchemeKind::FiniteDifference;
  cfg.theta = 0;
  cfg.nodes_ladder = {9, 17, 33};
  cfg.dt_coeff = 0.25;
  cfg.dt_power = 2;
  ConvergenceReport rep = convergence_study(p, cfg);
  CHECK(rep.scheme_id == "kd");
  CHECK(rep.required_order == doctest::Approx(0.2));
  CHECK(rep.fitted_order_global > 1.5);  // smooth data: second order shows
  CHECK(rep.pass);
}

TEST_CASE("convergence ladder validation") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ConvergenceConfig cfg;
  cfg.nodes_ladder = {17, 33};
  CHECK_THROWS_AS(convergence_study(p, cfg), ConfigError);
  cfg.nodes_ladder = {33, 33, 65};
  CHECK_THROWS_AS(convergence_study(p, cfg), ConfigError);
}

TEST_CASE("smooth-profile consistency probe tracks the mesh") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ConsistencyConfig cfg;
  cfg.scheme = SchemeKind::FiniteDifference;
  cfg.theta = 1;
  cfg.smooth_field = true;
  cfg.eps_ladder = {0.4};
  cfg.dt_factors = {1, 0.5, 0.25};
  cfg.nodes = 65;
  ConsistencyReport rep = consistency_probe(p, cfg);
  REQUIRE(rep.samples.size() == 3);
  // truncation shrinks with dt and the model fit explains it
  CHECK(rep.samples[1].measured < rep.samples[0].measured);
  CHECK(rep.samples[2].measured < rep.samples[1].measured);
  CHECK(rep.rel_residual <= 0.15);
  CHECK(rep.pass);

  ConsistencyConfig fine = cfg;
  fine.dt_factors = {0.25};
  fine.nodes = 129;
  double coarse = consistency_probe(p, cfg).samples[2].measured;
  double refined = consistency_probe(p, fine).samples[0].measured;
  CHECK(coarse / refined == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("kink probe fits the three-term model without a dt term at CN") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ConsistencyConfig cfg;
  cfg.scheme = SchemeKind::SemiLagrangian;
  cfg.theta = 0.5;
  cfg.eps_ladder = {0.4, 0.2};
  cfg.dt_factors = {1, 0.5};
  cfg.nodes = 65;
  ConsistencyReport rep = consistency_probe(p, cfg);
  REQUIRE(rep.samples.size() == 4);
  for (const ConsistencySample& s : rep.samples) CHECK(s.measured > 0);
  CHECK(rep.rel_residual <= 0.15);
  CHECK(rep.c1_share <= 0.01);
  CHECK(rep.pass);
}

TEST_CASE("consistency probe validation") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ConsistencyConfig cfg;
  cfg.nodes = 65;
  cfg.eps_ladder = {0.01};  // below twice the mesh width
  CHECK_THROWS_AS(consistency_probe(p, cfg), ConfigError);
  cfg.eps_ladder = {0.4};
  cfg.quadrature = 3;
  CHECK_THROWS_AS(consistency_probe(p, cfg), ConfigError);
  cfg.quadrature = 32;
  cfg.theta = 1.5;
  CHECK_THROWS_AS(consistency_probe(p, cfg), ConfigError);
  cfg.theta = 1;
  cfg.dt_factors = {0.5, 0.0};
  CHECK_THROWS_AS(consistency_probe(p, cfg), ConfigError);
}

TEST_CASE("barrier constant stays bounded under refinement") {
  ControlProblem p = builtin_problem("manufactured-1d");
  BarrierStudyConfig cfg;
  cfg.nodes_ladder = {17, 33};
  BarrierStudyReport rep = barrier_audit_study(p, cfg);
  CHECK(rep.a2.pass);
  CHECK(rep.a3.pass);
  REQUIRE(rep.k_per_rung.size() == 2);
  // |psi0| / zeta peaks at the midpoint: sin(pi/2) / 0.25
  for (double k : rep.k_per_rung) {
    CHECK(k >= 3.5);
    CHECK(k <= 5.5);
  }
  CHECK(rep.k_max <= 2 * rep.k_min);
  // up to fp noise in sin(pi*1) at the right boundary node
  for (double m : rep.mismatch_per_rung) CHECK(m <= 1e-12);
  CHECK(rep.pass);

  BarrierStudyConfig bad = cfg;
  bad.nodes_ladder = {};
  CHECK_THROWS_AS(barrier_audit_study(p, bad), ConfigError);
  CHECK_THROWS_AS(barrier_audit_study(builtin_problem("boundary-layer"), cfg),
                  ConfigError);
}

TEST_CASE("switching gaps equal the switching cost here") {
  // alpha=1 is optimal everywhere, so the restricted single-control mode
  // saturates its obstacle and the sup gap is exactly the cost
  ControlProblem p = builtin_problem("manufactured-1d");
  SwitchingStudyConfig cfg;
  cfg.mode_controls = {{0}, {1}};
  cfg.cost_ladder = {0.2, 0.1};
  cfg.nodes = 33;
  cfg.base.run_audits = false;
  SwitchingStudyReport rep = switching_study(p, cfg);
  REQUIRE(rep.gaps.size() == 2);
  CHECK(rep.gaps[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(rep.gaps[1] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(rep.min_feasibility >= -1e-9);
  CHECK(rep.monotone);
  CHECK(rep.fitted_decay == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.pass);
}

TEST_CASE("switching study validation") {
  ControlProblem p = builtin_problem("manufactured-1d");
  SwitchingStudyConfig cfg;
  cfg.mode_controls = {{0}, {1}};
  cfg.cost_ladder = {0.1};
  CHECK_THROWS_AS(switching_study(p, cfg), ConfigError);
  cfg.cost_ladder = {0.1, 0.2};
  CHECK_THROWS_AS(switching_study(p, cfg), ConfigError);
  cfg.cost_ladder = {0.1, 0.0};
  CHECK_THROWS_AS(switching_study(p, cfg), ConfigError);
}

TEST_CASE("perturbing one coefficient field moves only that field") {
  ControlProblem p = builtin_problem("manufactured-1d");
  Point x{0.3, 0};
  ControlProblem q = perturb_problem(p, PerturbField::Cost, 0.25);
  CHECK(q.running_cost(0, 0.2, x) ==
        doctest::Approx(p.running_cost(0, 0.2, x) + 0.25).epsilon(1e-15));
  CHECK(q.discount(0, 0.2, x) == p.discount(0, 0.2, x));
  double s0 = 0, s1 = 0;
  q = perturb_problem(p, PerturbField::Sigma, 0.25);
  p.sigma(1, 0.2, x, &s0);
  q.sigma(1, 0.2, x, &s1);
  CHECK(s1 == doctest::Approx(s0 + 0.25).epsilon(1e-15));
  q = perturb_problem(p, PerturbField::Drift, 0.25);
  p.drift(0, 0.2, x, &s0);
  q.drift(0, 0.2, x, &s1);
  CHECK(s1 == doctest::Approx(s0 + 0.25).epsilon(1e-15));
  q = perturb_problem(p, PerturbField::Discount, 0.25);
  CHECK(q.discount(1, 0.2, x) ==
        doctest::Approx(p.discount(1, 0.2, x) + 0.25).epsilon(1e-15));
}

TEST_CASE("continuous dependence exponents") {
  ControlProblem p = builtin_problem("manufactured-1d");
  DependenceConfig cfg;
  cfg.nodes = 17;
  cfg.deltas = {1e-2, 1e-1};
  cfg.base.run_audits = false;
  DependenceReport rep = dependence_probe(p, cfg);
  REQUIRE(rep.fields.size() == 4);
  for (const DependenceFieldResult& f : rep.fields) {
    CAPTURE(static_cast<int>(f.field));
    CHECK(f.required ==
          (f.field == PerturbField::Sigma ? doctest::Approx(0.45)
                                          : doctest::Approx(0.95)));
    CHECK(f.fitted_exponent >= f.required);
    CHECK(f.pass);
  }
  CHECK(rep.pass);

  DependenceConfig bad = cfg;
  bad.deltas = {1e-2};
  CHECK_THROWS_AS(dependence_probe(p, bad), ConfigError);
  bad.deltas = {1e-2, 0.0};
  CHECK_THROWS_AS(dependence_probe(p, bad), ConfigError);
  bad = cfg;
  bad.fields = {};
  CHECK_THROWS_AS(dependence_probe(p, bad), ConfigError);
}

TEST_CASE("comparison bound holds without any exponential tilt") {
  ControlProblem p = builtin_problem("manufactured-1d");
  ComparisonStudyConfig cfg;
  cfg.nodes = 17;
  cfg.deltas = {1e-2, 1e-1};
  cfg.base.run_audits = false;
  ComparisonStudyReport rep = comparison_bound_study(p, cfg);
  CHECK(rep.mu == 0.0);
  CHECK(rep.max_violation <= 1e-9);
  CHECK(rep.min_ordering >= -1e-12);
  CHECK(rep.pass);

  ComparisonStudyConfig bad = cfg;
  bad.deltas = {};
  CHECK_THROWS_AS(comparison_bound_study(p, bad), ConfigError);
}

TEST_CASE("boundary-layer demonstration, frozen values") {
  BoundaryLayerConfig cfg;  // dx = 1/64, safety 0.99
  BoundaryLayerReport rep = boundary_layer_demo(cfg);
  CHECK(rep.steps == 518);
  CHECK(rep.dt == doctest::Approx(2.0 / 518).epsilon(1e-15));
  CHECK(rep.u1_final == doctest::Approx(0.33383813871357976).epsilon(1e-12));
  CHECK(rep.bound_final == doctest::Approx(0.25591344831638424).epsilon(1e-12));
  CHECK(rep.interior_err == doctest::Approx(3.0227e-4).epsilon(1e-3));
  CHECK(rep.min_slack >= -1e-12);
  CHECK(rep.bound_final > 0.25);
  CHECK(rep.layer_gap > 0.19);  // the boundary value never relaxes to e^{-T}
  CHECK(rep.pass_bound);
  CHECK(rep.pass_quarter);
  CHECK(rep.pass_interior);
  CHECK(rep.pass);
  CHECK(rep.times.size() == static_cast<std::size_t>(rep.steps) + 1);
}

TEST_CASE("boundary-layer demonstration validation") {
  BoundaryLayerConfig cfg;
  cfg.dx = 0.3;
  CHECK_THROWS_AS(boundary_layer_demo(cfg), ConfigError);
  cfg.dx = 1.0 / 64;
  cfg.safety = 0.0;
  CHECK_THROWS_AS(boundary_layer_demo(cfg), ConfigError);
  cfg.safety = 1.2;
  CHECK_THROWS_AS(boundary_layer_demo(cfg), ConfigError);
}

TEST_SUITE_END();
