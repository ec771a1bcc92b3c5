#pragma once

#include <Eigen/Dense>
#include <vector>

namespace slungload {

// Banded LU with partial pivoting inside the band (LAPACK-style: row swaps
// widen the upper band by at most the lower bandwidth). Solves A x = b and
// the transposed system A^T x = b, the latter being the adjoint pass of the
// spline constructor. O(n * band^2) factorize, O(n * band) solves.
class BandedLU {
 public:
  void resize(int n, int lower, int upper);

  // Zero the working array; call before refilling an existing instance.
  void reset();

  // Entry access while assembling; (i, j) must satisfy -lower <= j-i and
  // j-i <= upper (pre-factorization band).
  double& operator()(int i, int j) { return row_[i][j - (i - lower_)]; }
  double at(int i, int j) const { return row_[i][j - (i - lower_)]; }

  // In-place factorization. Returns false when a pivot column underflows
  // (singular system).
  bool factorize();

  // b: n x m right-hand sides, overwritten with the solution.
  template <typename Derived>
  void solve(Eigen::MatrixBase<Derived>& b) const {
    const int n = n_;
    for (int j = 0; j < n; ++j) {
      if (piv_[j] != j) b.row(j).swap(b.row(piv_[j]));
      const int iend = std::min(j + lower_, n - 1);
      for (int i = j + 1; i <= iend; ++i)
        b.row(i) -= mult_[j][i - j - 1] * b.row(j);
    }
    for (int j = n - 1; j >= 0; --j) {
      const int cend = std::min(j + width_ - 1, n - 1);
      for (int c = j + 1; c <= cend; ++c) b.row(j) -= at_u(j, c) * b.row(c);
      b.row(j) /= at_u(j, j);
    }
  }

  // Transposed solve A^T x = b (adjoint of the factorized operator).
  template <typename Derived>
  void solve_transpose(Eigen::MatrixBase<Derived>& b) const {
    const int n = n_;
    for (int j = 0; j < n; ++j) {  // U^T is lower triangular
      b.row(j) /= at_u(j, j);
      const int cend = std::min(j + width_ - 1, n - 1);
      for (int c = j + 1; c <= cend; ++c) b.row(c) -= at_u(j, c) * b.row(j);
    }
    for (int j = n - 1; j >= 0; --j) {
      const int iend = std::min(j + lower_, n - 1);
      for (int i = j + 1; i <= iend; ++i)
        b.row(j) -= mult_[j][i - j - 1] * b.row(i);
      if (piv_[j] != j) b.row(j).swap(b.row(piv_[j]));
    }
  }

  int size() const { return n_; }

 private:
  // Post-factorization U entry; columns j..j+width_-1 of row j.
  double at_u(int j, int c) const { return row_[j][c - (j - lower_)]; }

  int n_ = 0, lower_ = 0, upper_ = 0;
  int width_ = 0;  // upper band width after fill: lower_ + upper_ + 1
  // row_[i] spans absolute columns [i - lower_, i + upper_ + lower_].
  std::vector<std::vector<double>> row_;
  std::vector<std::vector<double>> mult_;  // mult_[j][k] eliminates row j+1+k
  std::vector<int> piv_;
};

}  // namespace slungload
