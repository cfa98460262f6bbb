#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fisherbound/expfam.hpp"
#include "fisherbound/numkit.hpp"
#include "fisherbound/statistics.hpp"

namespace fisherbound {

/// Moments of the auxiliary statistics at one parameter value:
/// mu = E[phi], dmu = d mu / d theta (L x M), cov = R_phi (L x L).
struct PointMoments {
  RealVector mu;
  Matrix dmu;
  SymMatrix cov;
};

struct Provenance {
  enum class Kind { closed_form, monte_carlo };
  Kind kind = Kind::closed_form;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double diff_step = 0.0;
  bool crn = false;
  bool operator==(const Provenance&) const = default;
};

/// Per-theta-grid record of statistic moments with provenance.
struct MomentProfile {
  std::vector<StatisticSpec> stats;
  RealVector theta_grid;
  std::vector<PointMoments> points;  // aligned with theta_grid
  RealVector jitter;                 // PSD-repair jitter recorded per grid point
  Provenance provenance;

  int stat_count() const { return static_cast<int>(stats.size()); }
  void validate() const;
};

struct TwoMomentBound {
  double value = 0.0;
  double b_star = 0.0;
  bool b_star_degenerate = false;  // denominator degenerate, fell back to b = 0
};

/// Two-moment information bound S(theta) evaluated at the optimal scalar
/// weight b*; falls back to b = 0 when the b* denominator degenerates.
TwoMomentBound two_moment_bound(const MomentSet& m);

/// S(theta) at a caller-supplied weight b. The denominator must be
/// positive; used by optimality property tests.
double two_moment_bound_at(const MomentSet& m, double b);

/// The b = 0 special case (d mu1)^2 / mu2.
double simple_bound(const MomentSet& m);

struct BoundReport {
  SymMatrix bound;          // M x M (scalar when M = 1)
  RealVector weights;       // optimal weights b*, length L (M = 1)
  RealVector norm_weights;  // normalized absolute weights, sum to 1
  std::optional<double> chi;
  std::optional<double> chi_db;
  double cond = 0.0;            // condition estimate of equilibrated R_phi
  double jitter_applied = 0.0;  // relative diagonal jitter used by the solve
  bool zero_gradient = false;

  double scalar() const;  // bound(0,0); requires M == 1
};

/// Covariance-inequality bound with caller-supplied weights:
/// (dmu^T B)(B^T R B)^-1 (B^T dmu).
SymMatrix weighted_bound(const PointMoments& pt, const Matrix& b_matrix);

/// Optimally weighted bound dmu^T R^-1 dmu with weights and diagnostics.
BoundReport strong_bound(const PointMoments& pt);

struct LossRatio {
  double chi = 0.0;
  double chi_db = 0.0;
};

/// chi = bound / F and 10*log10(chi).
LossRatio loss_chi(double bound, double fisher_exact);

/// Strong bound at every grid point, grid order preserved. When
/// exact_fisher is supplied (and M = 1), chi fields are filled in.
std::vector<BoundReport> bound_curve(const MomentProfile& profile,
                                     const std::function<double(double)>& exact_fisher = {});

/// Builds a MomentProfile from a model's closed-form statistic moments.
MomentProfile closed_form_profile(const ExpFamilyModel& model, std::vector<StatisticSpec> stats,
                                  RealVector theta_grid);

/// Closed-form moments at a single theta.
PointMoments closed_form_point(const ExpFamilyModel& model, const std::vector<StatisticSpec>& stats,
                               double theta);

}  // namespace fisherbound
