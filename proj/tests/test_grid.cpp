#include <cmath>

#include "doctest.h"
#include "hjb/errors.hpp"
#include "hjb/grid.hpp"
#include "hjb/rng.hpp"

using namespace hjb;

namespace {

GridFunction sample(const SpaceTimeGrid& g, double (*f)(double, double)) {
  GridFunction u = make_grid_function(g, 0);
  for (int i = 0; i < g.num_nodes(); ++i) {
    Point x = g.point(i);
    u.values[static_cast<std::size_t>(i)] = f(x[0], x[1]);
  }
  return u;
}

}  // namespace

TEST_SUITE_BEGIN("grid");

TEST_CASE("build_grid validates shapes") {
  CHECK_THROWS_AS(build_grid({0}, {1}, {2}, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(build_grid({0}, {1}, {5}, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(build_grid({0}, {1}, {5}, 0.1, 0), ConfigError);
  CHECK_THROWS_AS(build_grid({0}, {0}, {5}, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(build_grid({1}, {0}, {5}, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(build_grid({0, 0, 0}, {1, 1, 1}, {5, 5, 5}, 0.1, 1),
                  ConfigError);
  CHECK_THROWS_AS(build_grid({0, 0}, {1, 1}, {5}, 0.1, 1), ConfigError);

  SpaceTimeGrid g = build_grid({0, 0}, {1, 2}, {5, 9}, 0.25, 4);
  CHECK(g.dim == 2);
  CHECK(g.num_nodes() == 45);
  CHECK(g.num_interior() == 21);
  CHECK(g.dx[0] == doctest::Approx(0.25));
  CHECK(g.dx[1] == doctest::Approx(0.25));
  CHECK(g.horizon() == doctest::Approx(1.0));
}

TEST_CASE("node indexing round-trips") {
  SpaceTimeGrid g = build_grid({0, 0}, {1, 1}, {7, 5}, 0.1, 3);
  for (int i = 0; i < g.num_nodes(); ++i) {
    auto mi = g.multi_index(i);
    CHECK(g.node_of(mi[0], mi[1]) == i);
  }
}

TEST_CASE("boundary classification partitions the nodes") {
  SpaceTimeGrid g = build_grid({0, 0}, {1, 1}, {9, 6}, 0.1, 2);
  int interior = 0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    CHECK(g.is_interior(i) != g.is_spatial_boundary(i));
    if (g.is_interior(i)) ++interior;
  }
  CHECK(interior == g.num_interior());
  CHECK(static_cast<int>(g.interior_nodes().size()) == interior);
}

TEST_CASE("distance_to_boundary") {
  SpaceTimeGrid g = build_grid({0, -1}, {2, 1}, {5, 5}, 0.1, 1);
  CHECK(distance_to_boundary(g, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(distance_to_boundary(g, {0.25, 0.0}) == doctest::Approx(0.25));
  CHECK(distance_to_boundary(g, {1.0, 0.9}) == doctest::Approx(0.1));
  CHECK(distance_to_boundary(g, {0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(distance_to_boundary(g, {2.5, 0.0}), ConfigError);

  SpaceTimeGrid g1 = build_grid({0}, {1}, {5}, 0.1, 1);
  CHECK(distance_to_boundary(g1, {0.3, 0.0}) == doctest::Approx(0.3));
}

TEST_CASE("interpolation reproduces frozen oracle values") {
  // Reference values computed with an independent implementation.
  SpaceTimeGrid g1 = build_grid({0}, {1}, {33}, 0.1, 1);
  GridFunction u1 = sample(g1, [](double x, double) {
    return std::sin(3 * x) + x * x;
  });
  CHECK(interpolate(u1, {0.2371, 0}) ==
        doctest::Approx(0.7085813567025885).epsilon(1e-13));
  CHECK(interpolate(u1, {1.0, 0}) ==
        doctest::Approx(1.1411200080598671).epsilon(1e-13));

  SpaceTimeGrid g2 = build_grid({0, 0}, {1, 2}, {17, 9}, 0.1, 1);
  GridFunction u2 = sample(g2, [](double x, double y) {
    return std::cos(2 * x + y) * y;
  });
  CHECK(interpolate(u2, {0.333, 1.177}) ==
        doctest::Approx(-0.3266402188833794).epsilon(1e-13));
  CHECK(interpolate(u2, {0.97, 0.03}) ==
        doctest::Approx(-0.01737774373421672).epsilon(1e-13));
}

TEST_CASE("interpolation weights form a partition of unity") {
  SpaceTimeGrid g = build_grid({0, 0}, {1, 2}, {9, 7}, 0.1, 1);
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    Point x{rng.uniform(0, 1), rng.uniform(0, 2)};
    auto w = interpolation_weights(g, x);
    double total = 0;
    for (const auto& [node, wt] : w) {
      CHECK(wt >= 0.0);
      CHECK(node >= 0);
      CHECK(node < g.num_nodes());
      total += wt;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("interpolation is exact on affine functions") {
  SpaceTimeGrid g = build_grid({0, 0}, {1, 2}, {9, 7}, 0.1, 1);
  GridFunction u = sample(g, [](double x, double y) {
    return 2.0 + 3.0 * x - 0.7 * y;
  });
  Rng rng(102);
  for (int trial = 0; trial < 200; ++trial) {
    Point x{rng.uniform(0, 1), rng.uniform(0, 2)};
    CHECK(interpolate(u, x) ==
          doctest::Approx(2.0 + 3.0 * x[0] - 0.7 * x[1]).epsilon(1e-13));
  }
}

TEST_CASE("interpolation is monotone in the node values") {
  SpaceTimeGrid g = build_grid({0}, {1}, {17}, 0.1, 1);
  Rng rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    GridFunction lo = make_grid_function(g, 0);
    GridFunction hi = make_grid_function(g, 0);
    for (int i = 0; i < g.num_nodes(); ++i) {
      double a = rng.uniform(-1, 1);
      lo.values[static_cast<std::size_t>(i)] = a;
      hi.values[static_cast<std::size_t>(i)] = a + rng.uniform(0, 1);
    }
    Point x{rng.uniform(0, 1), 0};
    CHECK(interpolate(lo, x) <= interpolate(hi, x) + 1e-15);
  }
}

TEST_CASE("sup_norm and lipschitz_estimate") {
  SpaceTimeGrid g = build_grid({0}, {1}, {11}, 0.1, 1);
  GridFunction u = sample(g, [](double x, double) { return 3.0 * x - 1.0; });
  CHECK(sup_norm(u) == doctest::Approx(2.0));
  CHECK(lipschitz_estimate(u) == doctest::Approx(3.0));
}

TEST_SUITE_END();
