#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fisherbound/errors.hpp"
#include "fisherbound/numkit.hpp"
#include "fisherbound/rng.hpp"
#include "fisherbound/statistics.hpp"

namespace fisherbound {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double x) const { return x > lo && x < hi; }
};

/// First moment, second central moment, normalized third/fourth central
/// moments and the theta-derivatives of the first two.
struct MomentSet {
  double mu1 = 0, mu2 = 0, mu3bar = 0, mu4bar = 0;
  double dmu1 = 0, dmu2 = 0;
  void validate() const;
};

/// A reference distribution with exponential-family factorization
///   log p(z;theta) = w(theta)^T t(z) - lambda(theta) + kappa(z),
/// exact Fisher information, closed-form moments and a pivotal sampler.
///
/// Models are immutable after construction; all queries are thread-safe.
class ExpFamilyModel {
public:
  virtual ~ExpFamilyModel() = default;

  virtual std::string name() const = 0;
  virtual Interval support() const = 0;
  virtual Interval parameter_space() const = 0;
  virtual int stat_dim() const = 0;  // number of sufficient statistics

  virtual double log_density(double z, double theta) const = 0;
  virtual double score(double z, double theta) const = 0;
  virtual double fisher(double theta) const = 0;

  virtual RealVector natural_params(double theta) const = 0;        // w(theta)
  virtual RealVector sufficient_stats(double z) const = 0;          // t(z)
  virtual double log_normalizer(double theta) const = 0;            // lambda(theta)
  virtual double carrier(double z) const = 0;                       // kappa(z)
  virtual RealVector suff_stat_mean(double theta) const = 0;        // E[t(z)]

  // Closed-form derivatives where the model has them; the defaults fall
  // back to a central difference with step h.
  virtual RealVector natural_param_deriv(double theta, double h = 1e-6) const;
  virtual RealVector suff_stat_mean_deriv(double theta, double h = 1e-6) const;

  virtual double raw_moment(double theta, int l) const = 0;  // E[z^l], l in 1..8
  virtual MomentSet moment_set(double theta) const = 0;

  // Closed-form moments of auxiliary statistics, where available.
  // Throws UnsupportedStatistic for combinations without a closed form.
  virtual double stat_mean(const StatisticSpec& s, double theta) const = 0;
  virtual double stat_mean_deriv(const StatisticSpec& s, double theta) const = 0;
  virtual double stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                                   double theta) const = 0;

  // Pivotal sampling: z = from_noise(theta, draw_noise(rng)) with a
  // theta-independent noise law, so common random numbers across theta
  // perturbations are possible.
  virtual double draw_noise(Rng& rng) const { return rng.normal(); }
  virtual double from_noise(double theta, double noise) const = 0;
  std::vector<double> sample(double theta, std::size_t n, std::uint64_t seed) const;

protected:
  void require_theta(double theta) const;
  void require_z(double z) const;
};

/// Log-normal with known scale sigma; theta is the log-scale location.
/// Sufficient statistic t(z) = ln z with natural parameter theta/sigma^2;
/// all theta-free terms of the exponent live in kappa(z).
class LogNormalModel final : public ExpFamilyModel {
public:
  explicit LogNormalModel(double sigma);
  double sigma() const { return sigma_; }

  std::string name() const override { return "lognormal"; }
  Interval support() const override { return {0.0, std::numeric_limits<double>::infinity()}; }
  Interval parameter_space() const override { return {}; }
  int stat_dim() const override { return 1; }
  double log_density(double z, double theta) const override;
  double score(double z, double theta) const override;
  double fisher(double theta) const override;
  RealVector natural_params(double theta) const override;
  RealVector sufficient_stats(double z) const override;
  double log_normalizer(double theta) const override;
  double carrier(double z) const override;
  RealVector suff_stat_mean(double theta) const override;
  RealVector natural_param_deriv(double theta, double h) const override;
  RealVector suff_stat_mean_deriv(double theta, double h) const override;
  double raw_moment(double theta, int l) const override;
  MomentSet moment_set(double theta) const override;
  double stat_mean(const StatisticSpec& s, double theta) const override;
  double stat_mean_deriv(const StatisticSpec& s, double theta) const override;
  double stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                           double theta) const override;
  double from_noise(double theta, double noise) const override;

private:
  double sigma_;
};

/// Weibull with known shape k; theta is the scale. Sufficient statistic
/// t(z) = z^k with natural parameter -theta^-k; theta-free terms of the
/// exponent live in kappa(z).
class WeibullModel final : public ExpFamilyModel {
public:
  explicit WeibullModel(double k);
  double shape() const { return k_; }

  std::string name() const override { return "weibull"; }
  Interval support() const override { return {0.0, std::numeric_limits<double>::infinity()}; }
  Interval parameter_space() const override { return {0.0, std::numeric_limits<double>::infinity()}; }
  int stat_dim() const override { return 1; }
  double log_density(double z, double theta) const override;
  double score(double z, double theta) const override;
  double fisher(double theta) const override;
  RealVector natural_params(double theta) const override;
  RealVector sufficient_stats(double z) const override;
  double log_normalizer(double theta) const override;
  double carrier(double z) const override;
  RealVector suff_stat_mean(double theta) const override;
  RealVector natural_param_deriv(double theta, double h) const override;
  RealVector suff_stat_mean_deriv(double theta, double h) const override;
  double raw_moment(double theta, int l) const override;
  MomentSet moment_set(double theta) const override;
  double stat_mean(const StatisticSpec& s, double theta) const override;
  double stat_mean_deriv(const StatisticSpec& s, double theta) const override;
  double stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                           double theta) const override;
  double draw_noise(Rng& rng) const override { return rng.uniform01(); }
  double from_noise(double theta, double noise) const override;

private:
  double gamma_l(double l) const;  // Gamma(1 + l/k)
  double k_;
};

/// Univariate Gaussian with mean mu(theta) and variance var(theta) given
/// as functions. Sufficient statistics (z, z^2). Since var may depend on
/// theta, all z-free exponent terms live in lambda(theta) and kappa = 0.
class GaussianModel final : public ExpFamilyModel {
public:
  using Fn = std::function<double(double)>;
  GaussianModel(Fn mu, Fn dmu, Fn var, Fn dvar);
  static GaussianModel location(double sigma2);

  std::string name() const override { return "gaussian"; }
  Interval support() const override { return {}; }
  Interval parameter_space() const override { return {}; }
  int stat_dim() const override { return 2; }
  double log_density(double z, double theta) const override;
  double score(double z, double theta) const override;
  double fisher(double theta) const override;
  RealVector natural_params(double theta) const override;
  RealVector sufficient_stats(double z) const override;
  double log_normalizer(double theta) const override;
  double carrier(double z) const override;
  RealVector suff_stat_mean(double theta) const override;
  RealVector natural_param_deriv(double theta, double h) const override;
  RealVector suff_stat_mean_deriv(double theta, double h) const override;
  double raw_moment(double theta, int l) const override;
  MomentSet moment_set(double theta) const override;
  double stat_mean(const StatisticSpec& s, double theta) const override;
  double stat_mean_deriv(const StatisticSpec& s, double theta) const override;
  double stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                           double theta) const override;
  double from_noise(double theta, double noise) const override;

private:
  double var_checked(double theta) const;
  Fn mu_, dmu_, var_, dvar_;
};

double lognormal_raw_moment(double sigma, double theta, int l);
double lognormal_fisher(double sigma);
double weibull_raw_moment(double k, double theta, int l);
double weibull_fisher(double k, double theta);

/// F = (mu')^2 / var + (var')^2 / (2 var^2) for a parametric Gaussian.
double gaussian_identity_fisher(const std::function<double(double)>& mu_fn,
                                const std::function<double(double)>& dmu_fn,
                                const std::function<double(double)>& var_fn,
                                const std::function<double(double)>& dvar_fn, double theta);

/// Fisher information from the exponential-family identity
/// sum_l dE[t_l]/dtheta * dw_l/dtheta; h is the fallback difference step
/// for models without closed-form derivatives.
double fisher_identity(const ExpFamilyModel& model, double theta, double h = 1e-6);

}  // namespace fisherbound
