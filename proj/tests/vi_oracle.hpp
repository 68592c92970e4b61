#pragma once

// Shared by the solver tests and the acceptance runner: random positive-type
// max-systems plus a plain value-iteration oracle for
//   max_alpha (A^alpha x - b^alpha) = 0,
// where every A^alpha is strictly diagonally dominant with nonpositive
// off-diagonal entries.  Value iteration is a sup-norm contraction for such
// systems, so it converges to the unique solution independently of Howard.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hjb/linalg.hpp"
#include "hjb/rng.hpp"

namespace testutil {

struct MaxSystem {
  std::vector<std::vector<hjb::SparseRow>> rows;  // [control][node]
  std::vector<std::vector<double>> rhs;           // [control][node]
};

inline MaxSystem random_max_system(hjb::Rng& rng, int n, int controls) {
  MaxSystem sys;
  sys.rows.resize(static_cast<std::size_t>(controls));
  sys.rhs.resize(static_cast<std::size_t>(controls));
  for (int c = 0; c < controls; ++c) {
    auto& rows = sys.rows[static_cast<std::size_t>(c)];
    auto& rhs = sys.rhs[static_cast<std::size_t>(c)];
    rows.resize(static_cast<std::size_t>(n));
    rhs.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      hjb::SparseRow row;
      int offs = 2 + static_cast<int>(rng.index(3));  // 2..4 neighbours
      double wsum = 0;
      for (int k = 0; k < offs; ++k) {
        int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
        if (j == i) j = (j + 1) % n;
        double w = rng.uniform(0.05, 1.0);
        wsum += w;
        row.off.emplace_back(j, -w);
      }
      row.diag = 1 + wsum + rng.uniform(0.0, 0.5);
      rows[static_cast<std::size_t>(i)] = std::move(row);
      rhs[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
    }
  }
  return sys;
}

// Jacobi value iteration: x_i <- min_alpha (b_i - sum off x_j) / diag.
inline std::vector<double> vi_solve(const MaxSystem& sys, double tol = 1e-13,
                                    int max_iters = 100000) {
  const auto n = sys.rows[0].size();
  std::vector<double> x(n, 0.0), nx(n);
  for (int it = 0; it < max_iters; ++it) {
    double change = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = 0;
      bool first = true;
      for (std::size_t c = 0; c < sys.rows.size(); ++c) {
        const hjb::SparseRow& row = sys.rows[c][i];
        double s = sys.rhs[c][i];
        for (const auto& [j, v] : row.off)
          s -= v * x[static_cast<std::size_t>(j)];
        s /= row.diag;
        if (first || s < best) best = s;
        first = false;
      }
      nx[i] = best;
      change = std::max(change, std::fabs(nx[i] - x[i]));
    }
    x.swap(nx);
    if (change <= tol) return x;
  }
  throw std::runtime_error("value iteration did not converge");
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
