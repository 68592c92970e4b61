#pragma once

#include <utility>
#include <vector>

namespace hjb {

// Banded LU without pivoting.  Every system assembled by the solver is
// strictly diagonally dominant with positive diagonal (an M-matrix), so
// pivoting is unnecessary and factorization cannot break down.
class BandedLU {
 public:
  BandedLU(int n, int band);

  double& at(int i, int j);       // requires |i-j| <= band
  double at(int i, int j) const;  // zero outside the band is not stored

  int size() const { return n_; }
  int bandwidth() const { return band_; }

  void factor();  // throws NumericalError on a vanishing pivot
  std::vector<double> solve(std::vector<double> rhs) const;

 private:
  int n_;
  int band_;
  bool factored_ = false;
  std::vector<double> a_;  // row-major, 2*band+1 slots per row
};

// One row of a sparse linear system A x = rhs with the diagonal split off;
// `off` holds (column, value) pairs, column != row.
struct SparseRow {
  double diag = 1;
  std::vector<std::pair<int, double>> off;
};

struct IterativeResult {
  int iterations = 0;
  double residual = 0;  // max-norm of rhs - A x at exit
};

// Gauss-Seidel sweeps until |rhs - A x|_inf <= rel_tol * (1 + |rhs|_inf).
// Requires a strictly diagonally dominant system (guaranteed for the
// implicit part of a positive-type scheme).  Throws NumericalError when the
// sweep cap is hit.  `x` carries the initial guess and the solution.
IterativeResult gauss_seidel(const std::vector<SparseRow>& rows,
                             const std::vector<double>& rhs,
                             std::vector<double>& x, double rel_tol,
                             int max_iters = 100000);

}  // namespace hjb
