#include "fisherbound/bounds.hpp"

#include <cmath>
#include <limits>

namespace fisherbound {

void MomentProfile::validate() const {
  const std::size_t n = theta_grid.size();
  if (n == 0) throw FormatError("MomentProfile: empty theta grid");
  if (points.size() != n || jitter.size() != n)
    throw FormatError("MomentProfile: grid/points/jitter size mismatch");
  const int l = stat_count();
  if (l == 0) throw FormatError("MomentProfile: no statistics");
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && !(theta_grid[i] > theta_grid[i - 1]))
      throw FormatError("MomentProfile: theta grid not strictly increasing at row " +
                        std::to_string(i + 1));
    const PointMoments& pt = points[i];
    if (static_cast<int>(pt.mu.size()) != l || pt.dmu.rows() != l || pt.cov.order() != l)
      throw FormatError("MomentProfile: dimension mismatch at row " + std::to_string(i + 1));
    double scale = 0.0;
    for (int d = 0; d < l; ++d) {
      if (!(pt.cov(d, d) > 0.0))
        throw FormatError("MomentProfile: nonpositive covariance diagonal at row " +
                          std::to_string(i + 1));
      scale = std::max(scale, pt.cov(d, d));
    }
    if (jacobi_eigenvalues(pt.cov).front() < -1e-10 * scale)
      throw FormatError("MomentProfile: covariance not positive semidefinite at row " +
                        std::to_string(i + 1));
  }
}

double simple_bound(const MomentSet& m) {
  if (!(m.mu2 > 0.0)) throw InfeasibleMoments("simple_bound: mu2 must be positive");
  return m.dmu1 * m.dmu1 / m.mu2;
}

double two_moment_bound_at(const MomentSet& m, double b) {
  if (!(m.mu2 > 0.0)) throw InfeasibleMoments("two_moment_bound_at: mu2 must be positive");
  const double den = 1.0 + 2.0 * b * m.mu3bar + b * b * (m.mu4bar - 1.0);
  if (!(den > 0.0)) throw Error("two_moment_bound_at: nonpositive denominator");
  const double num = m.dmu1 + b / std::sqrt(m.mu2) * m.dmu2;
  return num * num / (m.mu2 * den);
}

TwoMomentBound two_moment_bound(const MomentSet& m) {
  m.validate();
  const double rt = std::sqrt(m.mu2);
  const double num = m.dmu1 * rt * m.mu3bar - m.dmu2;
  const double den = m.dmu2 * m.mu3bar - m.dmu1 * rt * (m.mu4bar - 1.0);
  const double scale = std::abs(m.dmu2 * m.mu3bar) + std::abs(m.dmu1 * rt * (m.mu4bar - 1.0));

  TwoMomentBound out;
  if (scale == 0.0 || std::abs(den) <= 1e-14 * scale || !std::isfinite(num / den)) {
    out.b_star = 0.0;
    out.b_star_degenerate = true;
  } else {
    out.b_star = num / den;
  }
  out.value = two_moment_bound_at(m, out.b_star);
  return out;
}

double BoundReport::scalar() const {
  if (bound.order() != 1) throw DimensionMismatch("BoundReport::scalar: bound is not 1x1");
  return bound(0, 0);
}

namespace {

void check_point(const PointMoments& pt) {
  const int l = static_cast<int>(pt.mu.size());
  if (pt.dmu.rows() != l || pt.cov.order() != l)
    throw DimensionMismatch("PointMoments: mu/dmu/cov dimensions disagree");
}

}  // namespace

SymMatrix weighted_bound(const PointMoments& pt, const Matrix& b_matrix) {
  check_point(pt);
  const int l = pt.cov.order();
  const int mb = b_matrix.cols();
  if (b_matrix.rows() != l) throw DimensionMismatch("weighted_bound: B rows must equal L");
  if (pt.dmu.cols() != mb)
    throw DimensionMismatch("weighted_bound: B columns must match parameter dimension");

  // Full column rank of B via its Gram matrix.
  SymMatrix gram(mb);
  for (int i = 0; i < mb; ++i)
    for (int j = i; j < mb; ++j) {
      double s = 0.0;
      for (int k = 0; k < l; ++k) s += b_matrix(k, i) * b_matrix(k, j);
      gram.set(i, j, s);
    }
  RealVector geig = jacobi_eigenvalues(gram);
  if (!(geig.front() > 1e-12 * std::max(geig.back(), 1e-300)))
    throw RankDeficientWeights("weighted_bound: B is rank deficient");

  // S = B^T R B, G = B^T dmu, bound = G^T S^-1 G.
  SymMatrix s(mb);
  for (int i = 0; i < mb; ++i)
    for (int j = i; j < mb; ++j) {
      double acc = 0.0;
      for (int p = 0; p < l; ++p)
        for (int q = 0; q < l; ++q) acc += b_matrix(p, i) * pt.cov(p, q) * b_matrix(q, j);
      s.set(i, j, acc);
    }
  Matrix g(mb, pt.dmu.cols());
  for (int i = 0; i < mb; ++i)
    for (int j = 0; j < pt.dmu.cols(); ++j) {
      double acc = 0.0;
      for (int p = 0; p < l; ++p) acc += b_matrix(p, i) * pt.dmu(p, j);
      g(i, j) = acc;
    }
  return quad_form_inv(s, g);
}

BoundReport strong_bound(const PointMoments& pt) {
  check_point(pt);
  const int l = pt.cov.order();
  const int m = pt.dmu.cols();

  SpdFactor factor = SpdFactor::make(pt.cov);

  bool zero_grad = true;
  for (int i = 0; i < l && zero_grad; ++i)
    for (int j = 0; j < m; ++j)
      if (pt.dmu(i, j) != 0.0) {
        zero_grad = false;
        break;
      }

  if (zero_grad) {
    // Vacuous but valid lower bound.
    return BoundReport{SymMatrix(m), RealVector(l, 0.0), RealVector(l, 0.0),
                       std::nullopt,  std::nullopt,       factor.cond(),
                       factor.jitter(), true};
  }

  Matrix x = factor.solve(pt.dmu);  // R^-1 dmu, L x M
  SymMatrix bound(m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < l; ++p) acc += pt.dmu(p, i) * x(p, j);
      bound.set(i, j, acc);
    }

  RealVector weights(l, 0.0), norm(l, 0.0);
  if (m == 1) {
    // b* = R^-1 dmu / sqrt(dmu^T R^-1 dmu); sign fixed so b^T dmu > 0,
    // which the positive square root already guarantees.
    const double s = bound(0, 0);
    const double inv_root = 1.0 / std::sqrt(s);
    double abs_sum = 0.0;
    for (int p = 0; p < l; ++p) {
      weights[p] = x(p, 0) * inv_root;
      abs_sum += std::abs(weights[p]);
    }
    if (abs_sum > 0.0)
      for (int p = 0; p < l; ++p) norm[p] = std::abs(weights[p]) / abs_sum;
  }

  return BoundReport{std::move(bound), std::move(weights), std::move(norm),
                     std::nullopt,     std::nullopt,       factor.cond(),
                     factor.jitter(),  false};
}

LossRatio loss_chi(double bound, double fisher_exact) {
  if (!(fisher_exact > 0.0)) throw NonPositiveFisher("loss_chi: exact Fisher must be positive");
  LossRatio r;
  r.chi = bound / fisher_exact;
  r.chi_db = 10.0 * std::log10(r.chi);
  return r;
}

std::vector<BoundReport> bound_curve(const MomentProfile& profile,
                                     const std::function<double(double)>& exact_fisher) {
  profile.validate();
  std::vector<BoundReport> out;
  out.reserve(profile.points.size());
  for (std::size_t i = 0; i < profile.points.size(); ++i) {
    const double theta = profile.theta_grid[i];
    try {
      BoundReport rep = strong_bound(profile.points[i]);
      if (exact_fisher && rep.bound.order() == 1) {
        const LossRatio lr = loss_chi(rep.scalar(), exact_fisher(theta));
        rep.chi = lr.chi;
        rep.chi_db = lr.chi_db;
      }
      out.push_back(std::move(rep));
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("bound_curve: grid index " + std::to_string(i) +
                                " (theta=" + std::to_string(theta) + "): " + e.what());
    } catch (const Error& e) {
      throw Error("bound_curve: grid index " + std::to_string(i) +
                  " (theta=" + std::to_string(theta) + "): " + e.what());
    }
  }
  return out;
}

PointMoments closed_form_point(const ExpFamilyModel& model, const std::vector<StatisticSpec>& stats,
                               double theta) {
  const int l = static_cast<int>(stats.size());
  if (l == 0) throw Error("closed_form_point: empty statistic list");
  RealVector mu(l);
  Matrix dmu(l, 1);
  SymMatrix cov(l);
  for (int i = 0; i < l; ++i) {
    mu[i] = model.stat_mean(stats[i], theta);
    dmu(i, 0) = model.stat_mean_deriv(stats[i], theta);
  }
  for (int i = 0; i < l; ++i)
    for (int j = i; j < l; ++j)
      cov.set(i, j, model.stat_cross_moment(stats[i], stats[j], theta) - mu[i] * mu[j]);
  return PointMoments{std::move(mu), std::move(dmu), std::move(cov)};
}

MomentProfile closed_form_profile(const ExpFamilyModel& model, std::vector<StatisticSpec> stats,
                                  RealVector theta_grid) {
  MomentProfile p;
  p.stats = std::move(stats);
  p.theta_grid = std::move(theta_grid);
  p.provenance.kind = Provenance::Kind::closed_form;
  p.points.reserve(p.theta_grid.size());
  for (double theta : p.theta_grid) {
    if (!model.parameter_space().contains(theta))
      throw OutOfSupport("closed_form_profile: theta=" + std::to_string(theta) +
                         " outside parameter space of " + model.name());
    p.points.push_back(closed_form_point(model, p.stats, theta));
  }
  p.jitter.assign(p.theta_grid.size(), 0.0);
  p.validate();
  return p;
}

}  // namespace fisherbound
