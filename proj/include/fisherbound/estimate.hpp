#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fisherbound/bounds.hpp"
#include "fisherbound/expfam.hpp"
#include "fisherbound/statistics.hpp"

namespace fisherbound {

/// Sample means of the auxiliary statistics; the raw data is discarded.
struct CompressedSample {
  std::vector<StatisticSpec> stats;
  RealVector phi_bar;
  std::uint64_t n = 0;
};

CompressedSample compress(const std::vector<double>& data, std::vector<StatisticSpec> stats);

/// Supplier of (mu, dmu, cov) at a parameter value (scalar parameter).
class MomentSource {
public:
  virtual ~MomentSource() = default;
  virtual const std::vector<StatisticSpec>& stats() const = 0;
  virtual PointMoments at(double theta) const = 0;
  virtual double theta_min() const = 0;
  virtual double theta_max() const = 0;
};

class ClosedFormSource final : public MomentSource {
public:
  ClosedFormSource(const ExpFamilyModel& model, std::vector<StatisticSpec> stats);
  const std::vector<StatisticSpec>& stats() const override { return stats_; }
  PointMoments at(double theta) const override;
  double theta_min() const override { return model_->parameter_space().lo; }
  double theta_max() const override { return model_->parameter_space().hi; }
  const ExpFamilyModel& model() const { return *model_; }

private:
  const ExpFamilyModel* model_;
  std::vector<StatisticSpec> stats_;
};

/// Linear interpolation of mu, dmu and covariance entries between grid
/// points; queries outside the grid throw OutOfGrid.
class ProfileSource final : public MomentSource {
public:
  explicit ProfileSource(const MomentProfile& profile);
  const std::vector<StatisticSpec>& stats() const override { return profile_->stats; }
  PointMoments at(double theta) const override;
  double theta_min() const override { return profile_->theta_grid.front(); }
  double theta_max() const override { return profile_->theta_grid.back(); }

private:
  const MomentProfile* profile_;
};

using WeightFn = std::function<RealVector(double)>;
using MeanFn = std::function<RealVector(double)>;

/// b*(theta) = R^-1 dmu (dmu^T R^-1 dmu)^(-1/2), sign-fixed so that
/// b^T dmu > 0. The returned closure references the source.
WeightFn optimal_weight_fn(const MomentSource& source);
MeanFn mean_fn(const MomentSource& source);

/// Per-sample asymptotic variance of the score-root estimator with
/// weights b: b^T R b / (b^T dmu)^2.
double asymptotic_variance(const PointMoments& pt, const RealVector& b);

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

struct CmleResult {
  double theta_hat = 0.0;
  int iterations = 0;     // refinement iterations after the coarse scan
  int sign_changes = 0;   // sign changes seen on the 256-point scan
  bool multiple_roots = false;
};

/// Solves b(theta)^T (phi_bar - mu(theta)) = 0 on the bracket by a
/// 256-point scan, then bisection with secant polish. With several sign
/// changes the root nearest the scan minimizer of the squared score is
/// returned and flagged.
CmleResult cmle_solve(const CompressedSample& sample, const MeanFn& mu_fn,
                      const WeightFn& weight_fn, Bracket bracket);

/// (phi_bar - mu)^T D (phi_bar - mu).
double gmm_objective(double theta, const CompressedSample& sample, const MeanFn& mu_fn,
                     const std::function<SymMatrix(double)>& d_matrix_fn);

struct GmmResult {
  double theta_hat = 0.0;
  int iterations = 0;
};

/// Scan plus golden-section refinement of the GMM objective.
GmmResult gmm_minimize(const CompressedSample& sample, const MeanFn& mu_fn,
                       const std::function<SymMatrix(double)>& d_matrix_fn, Bracket bracket);

struct EstimationReport {
  RealVector estimates;          // per-trial theta_hat
  std::vector<int> iterations;   // per-trial solver iterations
  std::uint64_t n_per_trial = 0;
  std::uint64_t trials = 0;
  double bias = 0.0;
  double empirical_var = 0.0;
  double predicted_var = 0.0;  // inverse bound / N (optimal) or the general formula
  std::uint64_t failures = 0;
};

struct AsymptoticConfig {
  double theta_true = 1.0;
  std::uint64_t n_per_trial = 10'000;
  std::uint64_t trials = 500;
  std::uint64_t seed = 0;
  Bracket bracket{0.0, 0.0};  // lo == hi requests the default bracket
};

using SampleDraw = std::function<double(double theta, Rng& rng)>;

/// Monte-Carlo harness: per trial draws n samples at theta_true,
/// compresses, solves, and compares empirical and predicted variance.
/// custom_weights == nullptr selects the optimal weights.
EstimationReport asymptotic_check(const SampleDraw& draw, const MomentSource& source,
                                  const AsymptoticConfig& cfg,
                                  const WeightFn* custom_weights = nullptr);

/// Convenience overload sampling from a reference model.
EstimationReport asymptotic_check(const ExpFamilyModel& model,
                                  const std::vector<StatisticSpec>& stats,
                                  const AsymptoticConfig& cfg,
                                  const WeightFn* custom_weights = nullptr);

Bracket default_bracket(const MomentSource& source, double theta_hint);

/// CSV: per-trial table (trial,theta_hat,iterations), a blank line, then
/// a summary table (bias,empirical_var,predicted_var,ratio).
void write_estimation_csv(const EstimationReport& report, std::ostream& out);

}  // namespace fisherbound
