#include <cmath>
#include <vector>

#include "doctest.h"
#include "hjb/errors.hpp"
#include "hjb/linalg.hpp"
#include "hjb/rng.hpp"

using namespace hjb;

namespace {

// Dense multiply of a banded matrix for residual checks.
std::vector<double> band_apply(const BandedLU& a,
                               const std::vector<double>& x) {
  int n = a.size(), band = a.bandwidth();
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - band); j <= std::min(n - 1, i + band); ++j)
      y[static_cast<std::size_t>(i)] +=
          a.at(i, j) * x[static_cast<std::size_t>(j)];
  return y;
}

}  // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("banded LU solves a tridiagonal system exactly") {
  int n = 40;
  BandedLU a(n, 1);
  std::vector<double> want(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    a.at(i, i) = 4.0 + 0.1 * i;
    if (i > 0) a.at(i, i - 1) = -1.0;
    if (i < n - 1) a.at(i, i + 1) = -1.3;
    want[static_cast<std::size_t>(i)] = std::sin(0.7 * i);
  }
  std::vector<double> rhs = band_apply(a, want);
  a.factor();
  std::vector<double> got = a.solve(rhs);
  for (int i = 0; i < n; ++i)
    CHECK(got[static_cast<std::size_t>(i)] ==
          doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("banded LU handles strongly asymmetric rows") {
  // Diffusion-plus-drift structure: one neighbour weight several orders of
  // magnitude larger than the mirrored one.  A solver that mishandles the
  // band layout shows up immediately here.
  int n = 25;
  BandedLU a(n, 2);
  Rng rng(42);
  std::vector<double> want(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double row_sum = 0;
    for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); ++j) {
      if (j == i) continue;
      double v = (j < i ? -4096.0 : -0.064) * rng.uniform(0.5, 1.0);
      a.at(i, j) = v;
      row_sum += std::fabs(v);
    }
    a.at(i, i) = row_sum + 1.0;
    want[static_cast<std::size_t>(i)] = rng.uniform(-1, 1);
  }
  std::vector<double> rhs = band_apply(a, want);
  a.factor();
  std::vector<double> got = a.solve(rhs);
  for (int i = 0; i < n; ++i)
    CHECK(got[static_cast<std::size_t>(i)] ==
          doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("banded LU reports a vanishing pivot") {
  BandedLU a(3, 1);
  a.at(0, 0) = 1.0;
  a.at(0, 1) = 2.0;
  a.at(1, 0) = 0.5;
  a.at(1, 1) = 1.0;  // second pivot becomes exactly zero
  a.at(2, 2) = 1.0;
  CHECK_THROWS_AS(a.factor(), NumericalError);
}

TEST_CASE("gauss_seidel matches the direct solve") {
  int n = 30;
  BandedLU a(n, 1);
  std::vector<SparseRow> rows(static_cast<std::size_t>(n));
  Rng rng(7);
  for (int i = 0; i < n; ++i) {
    SparseRow& r = rows[static_cast<std::size_t>(i)];
    double off_sum = 0;
    for (int j : {i - 1, i + 1}) {
      if (j < 0 || j >= n) continue;
      double v = rng.uniform(-1, 0);
      r.off.push_back({j, v});
      a.at(i, j) = v;
      off_sum += std::fabs(v);
    }
    r.diag = off_sum + rng.uniform(0.5, 1.5);
    a.at(i, i) = r.diag;
  }
  std::vector<double> rhs(static_cast<std::size_t>(n));
  for (auto& v : rhs) v = rng.uniform(-2, 2);

  a.factor();
  std::vector<double> direct = a.solve(rhs);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  IterativeResult it = gauss_seidel(rows, rhs, x, 1e-14);
  CHECK(it.iterations > 0);
  CHECK(it.residual <= 1e-13 * 3);
  for (int i = 0; i < n; ++i)
    CHECK(x[static_cast<std::size_t>(i)] ==
          doctest::Approx(direct[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("gauss_seidel throws at the sweep cap") {
  // Not diagonally dominant: iteration diverges and must hit the cap.
  std::vector<SparseRow> rows(2);
  rows[0].diag = 1.0;
  rows[0].off = {{1, 3.0}};
  rows[1].diag = 1.0;
  rows[1].off = {{0, 3.0}};
  std::vector<double> rhs{1.0, 1.0};
  std::vector<double> x{0.0, 0.0};
  CHECK_THROWS_AS(gauss_seidel(rows, rhs, x, 1e-12, 50), NumericalError);
}

TEST_SUITE_END();
