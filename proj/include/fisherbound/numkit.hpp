#pragma once

#include <functional>
#include <vector>

#include "fisherbound/errors.hpp"

namespace fisherbound {

using RealVector = std::vector<double>;

/// Dense symmetric matrix storing only the upper triangle,
/// packed row-major. Entry (i,j) with i <= j lives at
/// i*n - i*(i-1)/2 + (j-i).
class SymMatrix {
public:
  explicit SymMatrix(int order);
  static SymMatrix identity(int order);
  static SymMatrix diagonal(const RealVector& d);
  static SymMatrix from_upper(int order, RealVector packed_upper);

  int order() const { return order_; }
  double operator()(int i, int j) const { return tri_[index(i, j)]; }
  void set(int i, int j, double value);

  const RealVector& upper() const { return tri_; }
  double trace() const;

private:
  std::size_t index(int i, int j) const;
  int order_ = 0;
  RealVector tri_;
};

/// Small dense row-major matrix; used for the L x M gradient blocks.
class Matrix {
public:
  Matrix(int rows, int cols);
  static Matrix column(const RealVector& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

private:
  int rows_ = 0, cols_ = 0;
  RealVector data_;
};

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// The matrix is first equilibrated (scaled to unit diagonal); if the
/// factorization fails or the equilibrated condition estimate exceeds
/// 1e12, a diagonal jitter of 1e-12 (relative to the diagonal) is added
/// and the factorization retried once. `jitter()` reports the relative
/// jitter actually applied and `cond()` the eigenvalue-ratio estimate
/// of the equilibrated matrix.
class SpdFactor {
public:
  static SpdFactor make(const SymMatrix& a);

  RealVector solve(const RealVector& rhs) const;
  Matrix solve(const Matrix& rhs) const;

  int order() const { return n_; }
  double jitter() const { return jitter_; }
  double cond() const { return cond_; }

private:
  SpdFactor() = default;
  int n_ = 0;
  RealVector lower_;  // dense lower factor of the equilibrated matrix
  RealVector scale_;  // s_i = 1/sqrt(a_ii)
  double jitter_ = 0.0;
  double cond_ = 0.0;
};

struct SpdSolveInfo {
  double jitter = 0.0;
  double cond = 0.0;
};

/// Solves a*x = rhs for symmetric positive definite a.
RealVector solve_spd(const SymMatrix& a, const RealVector& rhs, SpdSolveInfo* info = nullptr);

/// Computes gT * a^-1 * g; g has a.order() rows.
SymMatrix quad_form_inv(const SymMatrix& a, const Matrix& g, SpdSolveInfo* info = nullptr);

/// True iff the smallest eigenvalue of (a - b) is >= -tol.
bool dominates(const SymMatrix& a, const SymMatrix& b, double tol);

/// Eigenvalues by cyclic Jacobi iteration, ascending order.
RealVector jacobi_eigenvalues(const SymMatrix& a);

/// Central difference (f(x+h) - f(x-h)) / (2h).
double central_diff(const std::function<double(double)>& f, double x, double h);

}  // namespace fisherbound
