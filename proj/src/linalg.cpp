#include "hjb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "hjb/errors.hpp"

namespace hjb {

BandedLU::BandedLU(int n, int band) : n_(n), band_(band) {
  if (n < 1 || band < 0) throw ConfigError("BandedLU: bad dimensions");
  a_.assign(static_cast<std::size_t>(n) * (2 * band + 1), 0.0);
}

double& BandedLU::at(int i, int j) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || std::abs(i - j) > band_)
    throw ConfigError("BandedLU: index outside the band");
  return a_[static_cast<std::size_t>(i) * (2 * band_ + 1) +
            static_cast<std::size_t>(j - i + band_)];
}

double BandedLU::at(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_ || std::abs(i - j) > band_)
    return 0.0;
  return a_[static_cast<std::size_t>(i) * (2 * band_ + 1) +
            static_cast<std::size_t>(j - i + band_)];
}

void BandedLU::factor() {
  const int w = 2 * band_ + 1;
  auto slot = [&](int i, int j) -> double& {
    return a_[static_cast<std::size_t>(i) * w +
              static_cast<std::size_t>(j - i + band_)];
  };
  for (int k = 0; k < n_; ++k) {
    const double piv = slot(k, k);
    if (!(std::abs(piv) > 0))
      throw NumericalError("BandedLU: zero pivot (matrix not M-type?)");
    const int iend = std::min(n_ - 1, k + band_);
    const int jend = std::min(n_ - 1, k + band_);
    for (int i = k + 1; i <= iend; ++i) {
      const double m = slot(i, k) / piv;
      slot(i, k) = m;
      if (m == 0) continue;
      for (int j = k + 1; j <= jend; ++j) slot(i, j) -= m * slot(k, j);
    }
  }
  factored_ = true;
}

std::vector<double> BandedLU::solve(std::vector<double> rhs) const {
  if (!factored_) throw ConfigError("BandedLU: solve before factor");
  if (static_cast<int>(rhs.size()) != n_)
    throw ConfigError("BandedLU: rhs size mismatch");
  const int w = 2 * band_ + 1;
  auto slot = [&](int i, int j) {
    return a_[static_cast<std::size_t>(i) * w +
              static_cast<std::size_t>(j - i + band_)];
  };
  for (int i = 0; i < n_; ++i) {  // L y = rhs, unit diagonal
    double s = rhs[static_cast<std::size_t>(i)];
    for (int j = std::max(0, i - band_); j < i; ++j)
      s -= slot(i, j) * rhs[static_cast<std::size_t>(j)];
    rhs[static_cast<std::size_t>(i)] = s;
  }
  for (int i = n_ - 1; i >= 0; --i) {  // U x = y
    double s = rhs[static_cast<std::size_t>(i)];
    const int jend = std::min(n_ - 1, i + band_);
    for (int j = i + 1; j <= jend; ++j)
      s -= slot(i, j) * rhs[static_cast<std::size_t>(j)];
    rhs[static_cast<std::size_t>(i)] = s / slot(i, i);
  }
  return rhs;
}

IterativeResult gauss_seidel(const std::vector<SparseRow>& rows,
                             const std::vector<double>& rhs,
                             std::vector<double>& x, double rel_tol,
                             int max_iters) {
  const std::size_t n = rows.size();
  if (rhs.size() != n || x.size() != n)
    throw ConfigError("gauss_seidel: size mismatch");
  double rhs_max = 0;
  for (double v : rhs) rhs_max = std::max(rhs_max, std::abs(v));
  const double tol = rel_tol * (1 + rhs_max);

  IterativeResult res;
  for (int sweep = 1; sweep <= max_iters; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = rhs[i];
      for (const auto& [j, v] : rows[i].off)
        s -= v * x[static_cast<std::size_t>(j)];
      x[i] = s / rows[i].diag;
    }
    double r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = rows[i].diag * x[i] - rhs[i];
      for (const auto& [j, v] : rows[i].off)
        s += v * x[static_cast<std::size_t>(j)];
      r = std::max(r, std::abs(s));
    }
    res.iterations = sweep;
    res.residual = r;
    if (r <= tol) return res;
  }
  throw NumericalError("gauss_seidel: sweep cap reached without convergence");
}

}  // namespace hjb
