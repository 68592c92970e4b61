#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hjb/grid.hpp"
#include "hjb/harness.hpp"
#include "hjb/problem.hpp"
#include "hjb/scheme_kd.hpp"
#include "hjb/scheme_sl.hpp"
#include "hjb/stencil.hpp"

using namespace hjb;

namespace {

// Constant-coefficient test problem; sigma entries given column-major.
ControlProblem const_problem(int dim, std::vector<double> sigma, int cols,
                             std::vector<double> b, double c, double l) {
  ControlProblem p;
  p.name = "const";
  p.dim = dim;
  p.horizon = 1;
  p.lower = {0, 0};
  p.upper = {1, 1};
  p.sigma_cols = cols;
  p.sigma = [sigma, dim, cols](int, double, const Point&, double* out) {
    for (int k = 0; k < dim * cols; ++k) out[k] = sigma[static_cast<std::size_t>(k)];
  };
  p.drift = [b, dim](int, double, const Point&, double* out) {
    for (int k = 0; k < dim; ++k) out[k] = b[static_cast<std::size_t>(k)];
  };
  p.discount = [c](int, double, const Point&) { return c; };
  p.running_cost = [l](int, double, const Point&) { return l; };
  p.psi0 = [](const Point&) { return 0.0; };
  p.psi1 = [](double, const Point&) { return 0.0; };
  return p;
}

// 1d helper: diffusion coefficient a, drift b (a = sigma^2/2).
ControlProblem p1d(double a, double b, double c = 0, double l = 0) {
  return const_problem(1, {std::sqrt(2 * a)}, 1, {b}, c, l);
}

// 2d helper from a target diffusion matrix via its Cholesky factor.
ControlProblem p2d(double a11, double a12, double a22) {
  double l00 = std::sqrt(2 * a11);
  double l10 = 2 * a12 / l00;
  double l11 = std::sqrt(2 * a22 - l10 * l10);
  return const_problem(2, {l00, l10, 0, l11}, 2, {0, 0}, 0, 0);
}

double weight_of(const StencilRow& row, int node) {
  double w = 0;
  for (const auto& [n, v] : row.node_terms)
    if (n == node) w += v;
  return w;
}

double off_weight_sum(const StencilRow& row) {
  double w = 0;
  for (const auto& [n, v] : row.node_terms) w += v;
  for (const auto& [pt, v] : row.boundary_terms) w += v;
  return w;
}

// L_h applied to a callable test field.
template <class F>
double apply_to(const StencilRow& row, const SpaceTimeGrid& g, F&& f) {
  std::vector<double> values(static_cast<std::size_t>(g.num_nodes()));
  for (int i = 0; i < g.num_nodes(); ++i)
    values[static_cast<std::size_t>(i)] = f(g.point(i));
  return apply_row(row, values, g, f);
}

}  // namespace

TEST_SUITE_BEGIN("schemes");

TEST_CASE("merge_node_terms sorts and combines duplicates") {
  StencilRow row;
  row.node_terms = {{5, 1.0}, {2, 0.5}, {5, 0.25}, {9, -0.1}};
  merge_node_terms(row);
  REQUIRE(row.node_terms.size() == 3);
  CHECK(row.node_terms[0] == std::pair<int, double>{2, 0.5});
  CHECK(row.node_terms[1] == std::pair<int, double>{5, 1.25});
  CHECK(row.node_terms[2] == std::pair<int, double>{9, -0.1});
}

TEST_CASE("fd row reproduces the 1d laplacian weights") {
  ControlProblem p = p1d(1.0, 0.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {17}, 0.01, 10);
  double h2 = 16.0 * 16.0;
  StencilRow row = assemble_kd(p, g, 0.0, 0, g.node_of(8));
  CHECK(row.center == g.node_of(8));
  CHECK(weight_of(row, g.node_of(7)) == doctest::Approx(h2).epsilon(1e-13));
  CHECK(weight_of(row, g.node_of(9)) == doctest::Approx(h2).epsilon(1e-13));
  CHECK(row.center_weight == doctest::Approx(2 * h2).epsilon(1e-13));
  CHECK(row.node_terms.size() == 2);
  CHECK(row.boundary_terms.empty());
}

TEST_CASE("fd row is exact on quadratics without drift") {
  ControlProblem p = p1d(0.7, 0.0, 0.3, 1.1);
  SpaceTimeGrid g = build_grid({0}, {1}, {33}, 0.01, 10);
  StencilRow row = assemble_kd(p, g, 0.0, 0, g.node_of(16));
  Point xc = g.point(g.node_of(16));
  auto phi = [](const Point& x) { return 2 * x[0] * x[0] - x[0] + 3; };
  // -a phi'' - c phi - l
  double want = -0.7 * 4 - 0.3 * phi(xc) - 1.1;
  CHECK(apply_to(row, g, phi) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("fd truncation on a quartic is second order") {
  ControlProblem p = p1d(0.5, 0.0);
  auto phi = [](const Point& x) { return std::pow(x[0], 4); };
  std::vector<double> hs, errs;
  for (int n : {9, 17, 33}) {
    SpaceTimeGrid g = build_grid({0}, {1}, {n}, 0.01, 10);
    StencilRow row = assemble_kd(p, g, 0.0, 0, g.node_of((n - 1) / 2));
    double want = -0.5 * 12 * 0.25;  // -a phi'' at x = 1/2
    double err = std::fabs(apply_to(row, g, phi) - want);
    // h^2/12 * a * phi'''' = 2 a h^2
    CHECK(err == doctest::Approx(2 * 0.5 * g.dx[0] * g.dx[0]).epsilon(1e-6));
    hs.push_back(g.dx[0]);
    errs.push_back(err);
  }
  CHECK(loglog_slope(hs, errs) >= 1.9);
}

TEST_CASE("fd drift is upwinded") {
  ControlProblem p = p1d(0.5, -3.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {17}, 0.01, 10);
  double h = g.dx[0], h2 = 1 / (h * h);
  StencilRow row = assemble_kd(p, g, 0.0, 0, g.node_of(8));
  CHECK(weight_of(row, g.node_of(7)) ==
        doctest::Approx(0.5 * h2 + 3.0 / h).epsilon(1e-13));
  CHECK(weight_of(row, g.node_of(9)) ==
        doctest::Approx(0.5 * h2).epsilon(1e-13));
  // exact on affine functions even with drift
  auto lin = [](const Point& x) { return 2 * x[0] + 1; };
  CHECK(apply_to(row, g, lin) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("fd drift landing on a diffusion neighbour keeps one merged term") {
  ControlProblem p = p1d(1.0, 4.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {17}, 0.01, 10);
  double h = g.dx[0];
  StencilRow row = assemble_kd(p, g, 0.0, 0, g.node_of(8));
  REQUIRE(row.node_terms.size() == 2);  // duplicates merged
  CHECK(weight_of(row, g.node_of(9)) ==
        doctest::Approx(1.0 / (h * h) + 4.0 / h).epsilon(1e-13));
}

TEST_CASE("fd cross terms sit on the corners matching sign(a12)") {
  ControlProblem p = p2d(1.0, 0.4, 1.0);
  SpaceTimeGrid g = build_grid({0, 0}, {1, 1}, {17, 17}, 0.01, 10);
  double h = g.dx[0], h2 = 1 / (h * h);
  StencilRow row = assemble_kd(p, g, 0.0, 0, g.node_of(8, 8));
  CHECK(weight_of(row, g.node_of(9, 9)) == doctest::Approx(0.4 * h2));
  CHECK(weight_of(row, g.node_of(7, 7)) == doctest::Approx(0.4 * h2));
  CHECK(weight_of(row, g.node_of(9, 7)) == 0.0);
  CHECK(weight_of(row, g.node_of(7, 9)) == 0.0);
  CHECK(weight_of(row, g.node_of(9, 8)) == doctest::Approx(0.6 * h2));
  CHECK(weight_of(row, g.node_of(8, 9)) == doctest::Approx(0.6 * h2));
  // row sum balances the centre (c = 0)
  CHECK(off_weight_sum(row) == doctest::Approx(row.center_weight).epsilon(1e-12));

  ControlProblem m = p2d(1.0, -0.4, 1.0);
  StencilRow mrow = assemble_kd(m, g, 0.0, 0, g.node_of(8, 8));
  CHECK(weight_of(mrow, g.node_of(9, 7)) == doctest::Approx(0.4 * h2));
  CHECK(weight_of(mrow, g.node_of(7, 9)) == doctest::Approx(0.4 * h2));
  CHECK(weight_of(mrow, g.node_of(9, 9)) == 0.0);

  // exact on a quadratic with cross curvature
  auto quad = [](const Point& x) {
    return x[0] * x[0] + 0.5 * x[1] * x[1] + 0.8 * x[0] * x[1];
  };
  double want = -(1.0 * 2 + 1.0 * 1 + 2 * 0.4 * 0.8);
  CHECK(apply_to(row, g, quad) == doctest::Approx(want).epsilon(1e-11));
}

TEST_CASE("fd flags a non diagonally dominant diffusion") {
  // PSD (a12 < sqrt(a11 a22)) but a12 > a22: the second axis weight dips
  // below zero and the positive-type check must say so.
  ControlProblem p = p2d(1.0, 0.9, 0.85);
  SpaceTimeGrid g = build_grid({0, 0}, {1, 1}, {9, 9}, 0.01, 10);
  std::vector<StencilRow> rows;
  for (int node : g.interior_nodes())
    rows.push_back(assemble_kd(p, g, 0.0, 0, node));
  PositiveTypeReport rep = check_positive_type(rows, 0.001, 1.0);
  CHECK(!rep.pass);
  CHECK(rep.min_off_weight < 0);
  CHECK(rep.worst_node >= 0);
}

TEST_CASE("explicit fd step obeys the parabolic time-step limit") {
  // a = 1/2 makes sigma = 1 and the stability bound dt = dx^2 exact in
  // floating point, so equality sits right on the edge
  ControlProblem p = p1d(0.5, 0.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {17}, 0.01, 10);
  std::vector<StencilRow> rows;
  for (int node : g.interior_nodes())
    rows.push_back(assemble_kd(p, g, 0.0, 0, node));
  double dx2 = g.dx[0] * g.dx[0];
  CHECK(check_positive_type(rows, dx2, 0.0).pass);
  CHECK(check_positive_type(rows, dx2, 0.0).min_explicit_coeff ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(!check_positive_type(rows, 2 * dx2, 0.0).pass);
  // fully implicit never binds
  CHECK(check_positive_type(rows, 10.0, 1.0).pass);
}

TEST_CASE("sl legs landing on nodes give the exact diffusion trace") {
  ControlProblem p = p1d(1.0, 0.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {65}, 0.01, 10);
  SLConfig cfg;
  cfg.stencil_step = g.dx[0] * g.dx[0] / 2;  // sqrt(h_s)*sigma = dx exactly
  StencilRow row = assemble_sl(p, g, 0.0, 0, g.node_of(32), cfg);
  auto quad = [](const Point& x) { return x[0] * x[0]; };
  CHECK(apply_to(row, g, quad) == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(row.boundary_terms.empty());
}

TEST_CASE("sl clipped legs stay exact on quadratics") {
  ControlProblem p = p1d(1.0, 0.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {65}, 0.01, 10);
  SLConfig cfg;
  cfg.stencil_step = 2 * g.dx[0] * g.dx[0];  // legs span 2 dx
  StencilRow row = assemble_sl(p, g, 0.0, 0, g.node_of(1), cfg);
  REQUIRE(!row.boundary_terms.empty());
  CHECK(row.boundary_terms[0].first[0] == doctest::Approx(0.0));
  auto quad = [](const Point& x) { return x[0] * x[0] - 0.3 * x[0]; };
  CHECK(apply_to(row, g, quad) == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("sl is exact on affine fields and on constants") {
  ControlProblem p = p1d(0.8, 1.7, 0.0, 0.4);
  SpaceTimeGrid g = build_grid({0}, {1}, {33}, 0.01, 10);
  SLConfig cfg;
  for (int node : {1, 7, 16, 31}) {
    CAPTURE(node);
    StencilRow row = assemble_sl(p, g, 0.0, 0, node, cfg);
    auto lin = [](const Point& x) { return 2 * x[0] + 1; };
    // -b phi' - l
    CHECK(apply_to(row, g, lin) ==
          doctest::Approx(-1.7 * 2 - 0.4).epsilon(1e-12));
    auto one = [](const Point&) { return 1.0; };
    CHECK(apply_to(row, g, one) == doctest::Approx(-0.4).epsilon(1e-12));
  }
}

TEST_CASE("sl drift leg uses the exact arclength weight") {
  ControlProblem p = p1d(0.0, 3.0);
  SpaceTimeGrid g = build_grid({0}, {1}, {33}, 0.01, 10);
  SLConfig cfg;  // h_s = dx
  StencilRow row = assemble_sl(p, g, 0.0, 0, g.node_of(16), cfg);
  auto lin = [](const Point& x) { return -4 * x[0] + 2; };
  CHECK(apply_to(row, g, lin) == doctest::Approx(12.0).epsilon(1e-12));
  // every off-centre weight nonnegative, row sum balances the centre
  for (const auto& [n, w] : row.node_terms) CHECK(w >= 0);
  CHECK(off_weight_sum(row) == doctest::Approx(row.center_weight));
}

TEST_CASE("sl interior truncation error decays like dx") {
  ControlProblem p = p1d(1.0, 0.5);
  auto phi = [](const Point& x) { return std::sin(2 * x[0]) * std::exp(x[0]); };
  auto lphi = [](double x) {
    double s = std::sin(2 * x), c = std::cos(2 * x), e = std::exp(x);
    double d1 = e * (s + 2 * c);
    double d2 = e * (s + 2 * c) + e * (2 * c - 4 * s);
    return -1.0 * d2 - 0.5 * d1;
  };
  SLConfig cfg;
  std::vector<double> hs, errs;
  for (int n : {33, 65, 129, 257}) {
    SpaceTimeGrid g = build_grid({0}, {1}, {n}, 0.01, 10);
    double err = 0;
    for (int node : g.interior_nodes()) {
      Point x = g.point(node);
      if (distance_to_boundary(g, x) <= 0.25) continue;
      StencilRow row = assemble_sl(p, g, 0.0, 0, node, cfg);
      err = std::max(err, std::fabs(apply_to(row, g, phi) - lphi(x[0])));
    }
    hs.push_back(g.dx[0]);
    errs.push_back(err);
  }
  double slope = loglog_slope(hs, errs);
  CHECK(slope >= 0.85);
}

TEST_CASE("sl time-step bound scales like dx^1.5") {
  ControlProblem p = builtin_problem("manufactured-1d");
  SLConfig cfg;
  cfg.theta = 0;
  std::vector<double> hs, bounds;
  for (int n : {33, 65, 129}) {
    SpaceTimeGrid g = build_grid({0}, {1}, {n}, 0.001, 10);
    double bound = cfl_bound(p, g, cfg);
    CHECK(bound > 0);
    // the bound itself passes, 5% above it fails
    std::vector<StencilRow> rows;
    for (int node : g.interior_nodes())
      for (int c = 0; c < p.num_controls(); ++c)
        rows.push_back(assemble_sl(p, g, 0.0, c, node, cfg));
    CHECK(check_positive_type(rows, bound, 0.0).pass);
    CHECK(!check_positive_type(rows, bound * 1.05, 0.0).pass);
    hs.push_back(g.dx[0]);
    bounds.push_back(bound);
  }
  double slope = loglog_slope(hs, bounds);
  CHECK(slope >= 1.4);
  CHECK(slope <= 1.6);

  // theta = 1/2 doubles the explicit headroom; theta = 1 removes it
  SpaceTimeGrid g = build_grid({0}, {1}, {65}, 0.001, 10);
  SLConfig half = cfg, full = cfg;
  half.theta = 0.5;
  full.theta = 1.0;
  CHECK(cfl_bound(p, g, half) ==
        doctest::Approx(2 * cfl_bound(p, g, cfg)).epsilon(1e-12));
  CHECK(cfl_bound(p, g, full) == std::numeric_limits<double>::infinity());
}

TEST_CASE("consistency error model arithmetic") {
  CHECK(consistency_error_model(1e-3, 1e-2, 0.1, 1.0, 1.0) ==
        doctest::Approx(11.1).epsilon(1e-12));
  // theta = 1/2 drops the first-order-in-dt term
  CHECK(consistency_error_model(1e-3, 1e-2, 0.1, 0.5, 1.0) ==
        doctest::Approx(10.1).epsilon(1e-12));
  // K and C scale linearly
  CHECK(consistency_error_model(1e-3, 1e-2, 0.1, 1.0, 2.0, 3.0) ==
        doctest::Approx(6 * 11.1).epsilon(1e-12));
}

TEST_SUITE_END();
