#include "fisherbound/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fisherbound {

namespace {

void require_finite(double v, const char* where) {
  if (!std::isfinite(v)) throw NonFinite(std::string(where) + ": non-finite value");
}

}  // namespace

SymMatrix::SymMatrix(int order) : order_(order) {
  if (order < 1) throw DimensionMismatch("SymMatrix: order must be >= 1");
  tri_.assign(static_cast<std::size_t>(order) * (order + 1) / 2, 0.0);
}

SymMatrix SymMatrix::identity(int order) {
  SymMatrix a(order);
  for (int i = 0; i < order; ++i) a.set(i, i, 1.0);
  return a;
}

SymMatrix SymMatrix::diagonal(const RealVector& d) {
  SymMatrix a(static_cast<int>(d.size()));
  for (int i = 0; i < a.order(); ++i) a.set(i, i, d[i]);
  return a;
}

SymMatrix SymMatrix::from_upper(int order, RealVector packed_upper) {
  SymMatrix a(order);
  if (packed_upper.size() != a.tri_.size())
    throw DimensionMismatch("SymMatrix::from_upper: packed size does not match order");
  for (double v : packed_upper) require_finite(v, "SymMatrix::from_upper");
  a.tri_ = std::move(packed_upper);
  return a;
}

std::size_t SymMatrix::index(int i, int j) const {
  if (i < 0 || j < 0 || i >= order_ || j >= order_)
    throw DimensionMismatch("SymMatrix: index out of range");
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(i) * order_ - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i);
}

void SymMatrix::set(int i, int j, double value) {
  require_finite(value, "SymMatrix::set");
  tri_[index(i, j)] = value;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < order_; ++i) t += (*this)(i, i);
  return t;
}

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw DimensionMismatch("Matrix: dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix Matrix::column(const RealVector& v) {
  Matrix m(static_cast<int>(v.size()), 1);
  for (int i = 0; i < m.rows(); ++i) m(i, 0) = v[i];
  return m;
}

SpdFactor SpdFactor::make(const SymMatrix& a) {
  const int n = a.order();
  SpdFactor f;
  f.n_ = n;
  f.scale_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double d = a(i, i);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefinite("SpdFactor: nonpositive diagonal entry at " + std::to_string(i));
    f.scale_[i] = 1.0 / std::sqrt(d);
  }

  // Equilibrated matrix (unit diagonal).
  SymMatrix eq(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) eq.set(i, j, a(i, j) * f.scale_[i] * f.scale_[j]);

  RealVector eig = jacobi_eigenvalues(eq);
  const double lo = eig.front(), hi = eig.back();
  f.cond_ = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();

  auto try_cholesky = [n](const SymMatrix& m, double jitter, RealVector& lower) -> bool {
    lower.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) {
      double diag = m(j, j) + jitter;
      for (int k = 0; k < j; ++k) diag -= lower[j * n + k] * lower[j * n + k];
      if (!(diag > 0.0) || !std::isfinite(diag)) return false;
      const double ljj = std::sqrt(diag);
      lower[j * n + j] = ljj;
      for (int i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (int k = 0; k < j; ++k) s -= lower[i * n + k] * lower[j * n + k];
        lower[i * n + j] = s / ljj;
      }
    }
    return true;
  };

  bool ok = f.cond_ <= 1e12 && try_cholesky(eq, 0.0, f.lower_);
  if (!ok) {
    // trace(eq)/n == 1, so the spec jitter e*trace/n is a flat 1e-12 here.
    const double jitter = 1e-12;
    if (!try_cholesky(eq, jitter, f.lower_))
      throw NotPositiveDefinite("SpdFactor: Cholesky failed after jitter (cond estimate " +
                                std::to_string(f.cond_) + ")");
    f.jitter_ = jitter;
  }
  return f;
}

RealVector SpdFactor::solve(const RealVector& rhs) const {
  if (static_cast<int>(rhs.size()) != n_)
    throw DimensionMismatch("SpdFactor::solve: rhs length does not match order");
  for (double v : rhs) require_finite(v, "SpdFactor::solve");
  // a x = rhs  <=>  eq (x/s) = s*rhs with eq = S a S, S = diag(scale).
  RealVector y(n_);
  for (int i = 0; i < n_; ++i) y[i] = rhs[i] * scale_[i];
  for (int i = 0; i < n_; ++i) {
    double s = y[i];
    for (int k = 0; k < i; ++k) s -= lower_[i * n_ + k] * y[k];
    y[i] = s / lower_[i * n_ + i];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n_; ++k) s -= lower_[k * n_ + i] * y[k];
    y[i] = s / lower_[i * n_ + i];
  }
  for (int i = 0; i < n_; ++i) y[i] *= scale_[i];
  return y;
}

Matrix SpdFactor::solve(const Matrix& rhs) const {
  if (rhs.rows() != n_) throw DimensionMismatch("SpdFactor::solve: rhs rows do not match order");
  Matrix x(rhs.rows(), rhs.cols());
  RealVector col(n_);
  for (int j = 0; j < rhs.cols(); ++j) {
    for (int i = 0; i < n_; ++i) col[i] = rhs(i, j);
    RealVector sol = solve(col);
    for (int i = 0; i < n_; ++i) x(i, j) = sol[i];
  }
  return x;
}

RealVector solve_spd(const SymMatrix& a, const RealVector& rhs, SpdSolveInfo* info) {
  SpdFactor f = SpdFactor::make(a);
  if (info) *info = {f.jitter(), f.cond()};
  return f.solve(rhs);
}

SymMatrix quad_form_inv(const SymMatrix& a, const Matrix& g, SpdSolveInfo* info) {
  if (g.rows() != a.order())
    throw DimensionMismatch("quad_form_inv: g rows do not match matrix order");
  SpdFactor f = SpdFactor::make(a);
  if (info) *info = {f.jitter(), f.cond()};
  Matrix x = f.solve(g);
  const int m = g.cols();
  SymMatrix out(m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < g.rows(); ++l) s += g(l, i) * x(l, j);
      out.set(i, j, s);
    }
  return out;
}

RealVector jacobi_eigenvalues(const SymMatrix& a) {
  const int n = a.order();
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i * n + j] = a(i, j);

  double norm = 0.0;
  for (double v : m) norm += v * v;
  norm = std::sqrt(norm);
  const double target = 1e-12 * std::max(norm, 1e-300);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * m[i * n + j] * m[i * n + j];
    if (std::sqrt(off) <= target) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = m[p * n + q];
        if (apq == 0.0) continue;
        const double app = m[p * n + p], aqq = m[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = m[k * n + p], akq = m[k * n + q];
          m[k * n + p] = c * akp - s * akq;
          m[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = m[p * n + k], aqk = m[q * n + k];
          m[p * n + k] = c * apk - s * aqk;
          m[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  RealVector eig(n);
  for (int i = 0; i < n; ++i) eig[i] = m[i * n + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

bool dominates(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.order() != b.order()) throw DimensionMismatch("dominates: order mismatch");
  SymMatrix d(a.order());
  for (int i = 0; i < a.order(); ++i)
    for (int j = i; j < a.order(); ++j) d.set(i, j, a(i, j) - b(i, j));
  return jacobi_eigenvalues(d).front() >= -tol;
}

double central_diff(const std::function<double(double)>& f, double x, double h) {
  if (!(h > 0.0)) throw Error("central_diff: step must be positive");
  const double fp = f(x + h), fm = f(x - h);
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw NonFinite("central_diff: function returned non-finite value near x=" + std::to_string(x));
  return (fp - fm) / (2.0 * h);
}

}  // namespace fisherbound
