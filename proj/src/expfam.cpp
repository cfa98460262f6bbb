#include "fisherbound/expfam.hpp"

#include <cmath>

namespace fisherbound {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw Overflow(std::string(what) + ": result not representable");
  return v;
}

// Raw moment of N(mean, var) by the recursion M_l = mean*M_{l-1} + (l-1)*var*M_{l-2}.
double gauss_raw_moment(double mean, double var, int l) {
  double prev = 1.0, cur = mean;
  if (l == 0) return 1.0;
  for (int i = 2; i <= l; ++i) {
    const double next = mean * cur + (i - 1) * var * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Canonical form z^p * ln^q z of a statistic on positive support.
struct PowLog {
  int p = 0, q = 0;
};

PowLog canonical_pos_support(const StatisticSpec& s, const char* model) {
  switch (s.kind) {
    case StatKind::power: return {s.exponent, 0};
    case StatKind::abs_value: return {1, 0};  // |z| = z on (0, inf)
    case StatKind::log_abs:
    case StatKind::log: return {0, 1};
    case StatKind::log_squared: return {0, 2};
  }
  throw UnsupportedStatistic(std::string(model) + ": statistic " + s.label());
}

}  // namespace

void MomentSet::validate() const {
  if (!(mu2 > 0.0)) throw InfeasibleMoments("MomentSet: mu2 must be positive");
  if (mu4bar < 1.0 + mu3bar * mu3bar - 1e-9)
    throw InfeasibleMoments("MomentSet: mu4bar below 1 + mu3bar^2");
}

RealVector ExpFamilyModel::natural_param_deriv(double theta, double h) const {
  RealVector d(stat_dim());
  for (int l = 0; l < stat_dim(); ++l)
    d[l] = central_diff([&](double t) { return natural_params(t)[l]; }, theta, h);
  return d;
}

RealVector ExpFamilyModel::suff_stat_mean_deriv(double theta, double h) const {
  RealVector d(stat_dim());
  for (int l = 0; l < stat_dim(); ++l)
    d[l] = central_diff([&](double t) { return suff_stat_mean(t)[l]; }, theta, h);
  return d;
}

std::vector<double> ExpFamilyModel::sample(double theta, std::size_t n, std::uint64_t seed) const {
  require_theta(theta);
  Rng rng(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = from_noise(theta, draw_noise(rng));
  return out;
}

void ExpFamilyModel::require_theta(double theta) const {
  if (!parameter_space().contains(theta))
    throw OutOfSupport(name() + ": theta=" + std::to_string(theta) + " outside parameter space");
}

void ExpFamilyModel::require_z(double z) const {
  if (!support().contains(z))
    throw OutOfSupport(name() + ": z=" + std::to_string(z) + " outside support");
}

// ---------------------------------------------------------------------------
// Log-normal

LogNormalModel::LogNormalModel(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw Error("LogNormalModel: sigma must be positive");
}

double LogNormalModel::log_density(double z, double theta) const {
  require_z(z);
  require_theta(theta);
  const double s2 = sigma_ * sigma_;
  const double d = std::log(z) - theta;
  return -0.5 * std::log(kTwoPi * s2) - std::log(z) - d * d / (2.0 * s2);
}

double LogNormalModel::score(double z, double theta) const {
  require_z(z);
  return (std::log(z) - theta) / (sigma_ * sigma_);
}

double LogNormalModel::fisher(double) const { return 1.0 / (sigma_ * sigma_); }

RealVector LogNormalModel::natural_params(double theta) const {
  require_theta(theta);
  return {theta / (sigma_ * sigma_)};
}

RealVector LogNormalModel::sufficient_stats(double z) const {
  require_z(z);
  return {std::log(z)};
}

double LogNormalModel::log_normalizer(double theta) const {
  return theta * theta / (2.0 * sigma_ * sigma_);
}

double LogNormalModel::carrier(double z) const {
  require_z(z);
  const double lz = std::log(z);
  return -0.5 * std::log(kTwoPi * sigma_ * sigma_) - lz - lz * lz / (2.0 * sigma_ * sigma_);
}

RealVector LogNormalModel::suff_stat_mean(double theta) const { return {theta}; }

RealVector LogNormalModel::natural_param_deriv(double theta, double) const {
  require_theta(theta);
  return {1.0 / (sigma_ * sigma_)};
}

RealVector LogNormalModel::suff_stat_mean_deriv(double, double) const { return {1.0}; }

double LogNormalModel::raw_moment(double theta, int l) const {
  return lognormal_raw_moment(sigma_, theta, l);
}

MomentSet LogNormalModel::moment_set(double theta) const {
  const double s2 = sigma_ * sigma_;
  const double es2 = std::exp(s2);
  MomentSet m;
  m.mu1 = std::exp(theta + 0.5 * s2);
  m.dmu1 = m.mu1;
  m.mu2 = std::exp(2.0 * theta + s2) * (es2 - 1.0);
  m.dmu2 = 2.0 * m.mu2;
  m.mu3bar = (es2 + 2.0) * std::sqrt(es2 - 1.0);
  m.mu4bar = std::exp(4.0 * s2) + 2.0 * std::exp(3.0 * s2) + 3.0 * std::exp(2.0 * s2) - 3.0;
  m.validate();
  return m;
}

double LogNormalModel::stat_mean(const StatisticSpec& s, double theta) const {
  const PowLog c = canonical_pos_support(s, "lognormal");
  const double s2 = sigma_ * sigma_;
  const double m = std::exp(c.p * theta + 0.5 * c.p * c.p * s2);
  return checked(m * gauss_raw_moment(theta + c.p * s2, s2, c.q), "lognormal stat_mean");
}

double LogNormalModel::stat_mean_deriv(const StatisticSpec& s, double theta) const {
  const PowLog c = canonical_pos_support(s, "lognormal");
  const double s2 = sigma_ * sigma_;
  const double m = std::exp(c.p * theta + 0.5 * c.p * c.p * s2);
  const double tilted = theta + c.p * s2;
  double d = c.p * gauss_raw_moment(tilted, s2, c.q);
  if (c.q > 0) d += c.q * gauss_raw_moment(tilted, s2, c.q - 1);
  return checked(m * d, "lognormal stat_mean_deriv");
}

double LogNormalModel::stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                                         double theta) const {
  const PowLog ca = canonical_pos_support(a, "lognormal");
  const PowLog cb = canonical_pos_support(b, "lognormal");
  const int p = ca.p + cb.p, q = ca.q + cb.q;
  const double s2 = sigma_ * sigma_;
  const double m = std::exp(p * theta + 0.5 * p * p * s2);
  return checked(m * gauss_raw_moment(theta + p * s2, s2, q), "lognormal stat_cross_moment");
}

double LogNormalModel::from_noise(double theta, double noise) const {
  return std::exp(theta + sigma_ * noise);
}

// ---------------------------------------------------------------------------
// Weibull

WeibullModel::WeibullModel(double k) : k_(k) {
  if (!(k > 0.0)) throw Error("WeibullModel: shape must be positive");
}

double WeibullModel::gamma_l(double l) const { return std::tgamma(1.0 + l / k_); }

double WeibullModel::log_density(double z, double theta) const {
  require_z(z);
  require_theta(theta);
  return std::log(k_) - k_ * std::log(theta) + (k_ - 1.0) * std::log(z) -
         std::pow(z / theta, k_);
}

double WeibullModel::score(double z, double theta) const {
  require_z(z);
  return k_ / theta * (std::pow(z / theta, k_) - 1.0);
}

double WeibullModel::fisher(double theta) const { return weibull_fisher(k_, theta); }

RealVector WeibullModel::natural_params(double theta) const {
  require_theta(theta);
  return {-std::pow(theta, -k_)};
}

RealVector WeibullModel::sufficient_stats(double z) const {
  require_z(z);
  return {std::pow(z, k_)};
}

double WeibullModel::log_normalizer(double theta) const { return k_ * std::log(theta); }

double WeibullModel::carrier(double z) const {
  require_z(z);
  return std::log(k_) + (k_ - 1.0) * std::log(z);
}

RealVector WeibullModel::suff_stat_mean(double theta) const {
  // E[z^k] = theta^k * Gamma(2) = theta^k
  return {std::pow(theta, k_)};
}

RealVector WeibullModel::natural_param_deriv(double theta, double) const {
  require_theta(theta);
  return {k_ * std::pow(theta, -k_ - 1.0)};
}

RealVector WeibullModel::suff_stat_mean_deriv(double theta, double) const {
  return {k_ * std::pow(theta, k_ - 1.0)};
}

double WeibullModel::raw_moment(double theta, int l) const {
  return weibull_raw_moment(k_, theta, l);
}

MomentSet WeibullModel::moment_set(double theta) const {
  const double g1 = gamma_l(1), g2 = gamma_l(2), g3 = gamma_l(3), g4 = gamma_l(4);
  const double v = g2 - g1 * g1;
  MomentSet m;
  m.mu1 = theta * g1;
  m.dmu1 = g1;
  m.mu2 = theta * theta * v;
  m.dmu2 = 2.0 * theta * v;
  m.mu3bar = (g3 - 3.0 * g1 * g2 + 2.0 * g1 * g1 * g1) / std::pow(v, 1.5);
  m.mu4bar = (g4 - 4.0 * g1 * g3 + 6.0 * g1 * g1 * g2 - 3.0 * g1 * g1 * g1 * g1) / (v * v);
  m.validate();
  return m;
}

double WeibullModel::stat_mean(const StatisticSpec& s, double theta) const {
  const PowLog c = canonical_pos_support(s, "weibull");
  if (c.q != 0) throw UnsupportedStatistic("weibull: no closed form for " + s.label());
  return checked(std::pow(theta, c.p) * gamma_l(c.p), "weibull stat_mean");
}

double WeibullModel::stat_mean_deriv(const StatisticSpec& s, double theta) const {
  const PowLog c = canonical_pos_support(s, "weibull");
  if (c.q != 0) throw UnsupportedStatistic("weibull: no closed form for " + s.label());
  return checked(c.p * std::pow(theta, c.p - 1) * gamma_l(c.p), "weibull stat_mean_deriv");
}

double WeibullModel::stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                                       double theta) const {
  const PowLog ca = canonical_pos_support(a, "weibull");
  const PowLog cb = canonical_pos_support(b, "weibull");
  if (ca.q != 0 || cb.q != 0)
    throw UnsupportedStatistic("weibull: no closed form for " + a.label() + "*" + b.label());
  const int p = ca.p + cb.p;
  return checked(std::pow(theta, p) * gamma_l(p), "weibull stat_cross_moment");
}

double WeibullModel::from_noise(double theta, double noise) const {
  return theta * std::pow(-std::log(noise), 1.0 / k_);
}

// ---------------------------------------------------------------------------
// Parametric Gaussian

GaussianModel::GaussianModel(Fn mu, Fn dmu, Fn var, Fn dvar)
    : mu_(std::move(mu)), dmu_(std::move(dmu)), var_(std::move(var)), dvar_(std::move(dvar)) {}

GaussianModel GaussianModel::location(double sigma2) {
  if (!(sigma2 > 0.0)) throw NonPositiveVariance("GaussianModel::location: sigma2 <= 0");
  return GaussianModel([](double t) { return t; }, [](double) { return 1.0; },
                       [sigma2](double) { return sigma2; }, [](double) { return 0.0; });
}

double GaussianModel::var_checked(double theta) const {
  const double v = var_(theta);
  if (!(v > 0.0)) throw NonPositiveVariance("gaussian: var(theta) <= 0 at theta=" +
                                            std::to_string(theta));
  return v;
}

double GaussianModel::log_density(double z, double theta) const {
  const double v = var_checked(theta);
  const double d = z - mu_(theta);
  return -0.5 * std::log(kTwoPi * v) - d * d / (2.0 * v);
}

double GaussianModel::score(double z, double theta) const {
  const double v = var_checked(theta);
  const double d = z - mu_(theta);
  return dmu_(theta) * d / v + dvar_(theta) * (d * d - v) / (2.0 * v * v);
}

double GaussianModel::fisher(double theta) const {
  return gaussian_identity_fisher(mu_, dmu_, var_, dvar_, theta);
}

RealVector GaussianModel::natural_params(double theta) const {
  const double v = var_checked(theta);
  return {mu_(theta) / v, -1.0 / (2.0 * v)};
}

RealVector GaussianModel::sufficient_stats(double z) const { return {z, z * z}; }

double GaussianModel::log_normalizer(double theta) const {
  const double v = var_checked(theta);
  const double m = mu_(theta);
  return m * m / (2.0 * v) + 0.5 * std::log(kTwoPi * v);
}

double GaussianModel::carrier(double) const { return 0.0; }

RealVector GaussianModel::suff_stat_mean(double theta) const {
  const double m = mu_(theta);
  return {m, var_checked(theta) + m * m};
}

RealVector GaussianModel::natural_param_deriv(double theta, double) const {
  const double v = var_checked(theta);
  const double m = mu_(theta), dm = dmu_(theta), dv = dvar_(theta);
  return {dm / v - m * dv / (v * v), dv / (2.0 * v * v)};
}

RealVector GaussianModel::suff_stat_mean_deriv(double theta, double) const {
  const double dm = dmu_(theta);
  return {dm, dvar_(theta) + 2.0 * mu_(theta) * dm};
}

double GaussianModel::raw_moment(double theta, int l) const {
  if (l < 1 || l > 8) throw Error("raw_moment: l must be in 1..8");
  return checked(gauss_raw_moment(mu_(theta), var_checked(theta), l), "gaussian raw_moment");
}

MomentSet GaussianModel::moment_set(double theta) const {
  MomentSet m;
  m.mu1 = mu_(theta);
  m.mu2 = var_checked(theta);
  m.mu3bar = 0.0;
  m.mu4bar = 3.0;
  m.dmu1 = dmu_(theta);
  m.dmu2 = dvar_(theta);
  m.validate();
  return m;
}

double GaussianModel::stat_mean(const StatisticSpec& s, double theta) const {
  if (s.kind != StatKind::power)
    throw UnsupportedStatistic("gaussian: no closed form for " + s.label());
  return checked(gauss_raw_moment(mu_(theta), var_checked(theta), s.exponent),
                 "gaussian stat_mean");
}

double GaussianModel::stat_mean_deriv(const StatisticSpec& s, double theta) const {
  if (s.kind != StatKind::power)
    throw UnsupportedStatistic("gaussian: no closed form for " + s.label());
  const int l = s.exponent;
  const double m = mu_(theta), v = var_checked(theta);
  double d = l * gauss_raw_moment(m, v, l - 1) * dmu_(theta);
  if (l >= 2) d += 0.5 * l * (l - 1) * gauss_raw_moment(m, v, l - 2) * dvar_(theta);
  return checked(d, "gaussian stat_mean_deriv");
}

double GaussianModel::stat_cross_moment(const StatisticSpec& a, const StatisticSpec& b,
                                        double theta) const {
  if (a.kind != StatKind::power || b.kind != StatKind::power)
    throw UnsupportedStatistic("gaussian: no closed form for " + a.label() + "*" + b.label());
  return checked(gauss_raw_moment(mu_(theta), var_checked(theta), a.exponent + b.exponent),
                 "gaussian stat_cross_moment");
}

double GaussianModel::from_noise(double theta, double noise) const {
  return mu_(theta) + std::sqrt(var_checked(theta)) * noise;
}

// ---------------------------------------------------------------------------
// Free functions

double lognormal_raw_moment(double sigma, double theta, int l) {
  if (!(sigma > 0.0)) throw Error("lognormal_raw_moment: sigma must be positive");
  if (l < 1 || l > 8) throw Error("lognormal_raw_moment: l must be in 1..8");
  return checked(std::exp(l * theta + 0.5 * l * l * sigma * sigma), "lognormal_raw_moment");
}

double lognormal_fisher(double sigma) {
  if (!(sigma > 0.0)) throw Error("lognormal_fisher: sigma must be positive");
  return 1.0 / (sigma * sigma);
}

double weibull_raw_moment(double k, double theta, int l) {
  if (!(k > 0.0) || !(theta > 0.0)) throw Error("weibull_raw_moment: k and theta must be positive");
  if (l < 1 || l > 8) throw Error("weibull_raw_moment: l must be in 1..8");
  return checked(std::pow(theta, l) * std::tgamma(1.0 + l / k), "weibull_raw_moment");
}

double weibull_fisher(double k, double theta) {
  if (!(k > 0.0) || !(theta > 0.0)) throw Error("weibull_fisher: k and theta must be positive");
  const double r = k / theta;
  return r * r;
}

double gaussian_identity_fisher(const std::function<double(double)>& mu_fn,
                                const std::function<double(double)>& dmu_fn,
                                const std::function<double(double)>& var_fn,
                                const std::function<double(double)>& dvar_fn, double theta) {
  (void)mu_fn;
  const double v = var_fn(theta);
  if (!(v > 0.0)) throw NonPositiveVariance("gaussian_identity_fisher: var(theta) <= 0");
  const double dm = dmu_fn(theta), dv = dvar_fn(theta);
  return dm * dm / v + dv * dv / (2.0 * v * v);
}

double fisher_identity(const ExpFamilyModel& model, double theta, double h) {
  const RealVector dmu = model.suff_stat_mean_deriv(theta, h);
  const RealVector dw = model.natural_param_deriv(theta, h);
  double f = 0.0;
  for (int l = 0; l < model.stat_dim(); ++l) f += dmu[l] * dw[l];
  return f;
}

}  // namespace fisherbound
