#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fisherbound/numkit.hpp"
#include "fisherbound/rng.hpp"

namespace testutil {

// Composite Simpson rule; n must be even.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Random symmetric positive definite matrix A^T A + I.
inline fisherbound::SymMatrix random_spd(int order, fisherbound::Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(order) * order);
  for (double& v : a) v = 2.0 * rng.uniform01() - 1.0;
  fisherbound::SymMatrix out(order);
  for (int i = 0; i < order; ++i)
    for (int j = i; j < order; ++j) {
      double s = (i == j) ? 1.0 : 0.0;
      for (int k = 0; k < order; ++k) s += a[k * order + i] * a[k * order + j];
      out.set(i, j, s);
    }
  return out;
}

inline fisherbound::SymMatrix random_symmetric(int order, fisherbound::Rng& rng) {
  fisherbound::SymMatrix out(order);
  for (int i = 0; i < order; ++i)
    for (int j = i; j < order; ++j) out.set(i, j, 2.0 * rng.uniform01() - 1.0);
  return out;
}

// y = A x for symmetric A.
inline fisherbound::RealVector sym_mul(const fisherbound::SymMatrix& a,
                                       const fisherbound::RealVector& x) {
  fisherbound::RealVector y(a.order(), 0.0);
  for (int i = 0; i < a.order(); ++i)
    for (int j = 0; j < a.order(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

inline double max_abs(const fisherbound::RealVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Pool-adjacent-violators fit of a nonincreasing sequence (least squares).
inline std::vector<double> isotonic_nonincreasing(const std::vector<double>& y) {
  std::vector<double> level, weight;
  for (double v : y) {
    level.push_back(v);
    weight.push_back(1.0);
    while (level.size() >= 2 && level[level.size() - 2] < level.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double m =
          (level[level.size() - 2] * weight[weight.size() - 2] + level.back() * weight.back()) / w;
      level.pop_back();
      weight.pop_back();
      level.back() = m;
      weight.back() = w;
    }
  }
  std::vector<double> fit;
  for (std::size_t i = 0; i < level.size(); ++i)
    for (int k = 0; k < static_cast<int>(weight[i]); ++k) fit.push_back(level[i]);
  return fit;
}

}  // namespace testutil
