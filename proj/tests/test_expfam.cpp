#include "fisherbound/expfam.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

using namespace fisherbound;

namespace {

// 22-digit reference values (independent of std::tgamma).
const struct {
  double x, gamma;
} kGammaRefs[] = {
    {0.5, 1.772453850905516027298},   {1.2, 0.918168742399760610641},
    {1.25, 0.9064024770554770779827}, {1.5, 0.8862269254527580136491},
    {2.5, 1.329340388179137020474},   {10.0 / 3.0, 2.778158480437664115765},
    {4.75, 16.58620653922593961083},  {6.5, 287.8852778150443609963},
    {9.0, 40320.0},                   {12.25, 73711509.04676994909085},
    {15.5, 334838609873.5564569724},  {20.0, 121645100408832000.0},
};

double mc_fisher(const ExpFamilyModel& m, double theta, std::size_t n, std::uint64_t seed,
                 double* se_out = nullptr) {
  const std::vector<double> z = m.sample(theta, n, seed);
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double v : z) {
    const double s = m.score(v, theta);
    const double s2 = s * s;
    ++k;
    const double d = s2 - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (s2 - mean);
  }
  if (se_out) *se_out = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return mean;
}

}  // namespace

TEST_CASE("gamma evaluation meets the 1e-12 relative contract") {
  for (const auto& ref : kGammaRefs)
    CHECK(std::abs(std::tgamma(ref.x) - ref.gamma) <= 1e-12 * ref.gamma);
}

TEST_CASE("lognormal raw moments") {
  CHECK(lognormal_raw_moment(1.0, 0.0, 1) ==
        doctest::Approx(1.648721270700128146849).epsilon(1e-14));
  CHECK(lognormal_raw_moment(1e-8, 0.0, 2) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(lognormal_raw_moment(0.5, 1.0, 3) ==
        doctest::Approx(61.86780925036788650962).epsilon(1e-14));
  CHECK_THROWS_AS(lognormal_raw_moment(1.0, 0.0, 9), Error);
  CHECK_THROWS_AS(lognormal_raw_moment(10.0, 0.0, 8), Overflow);
}

TEST_CASE("lognormal raw moments match quadrature of z^l p(z)") {
  const LogNormalModel m(0.7);
  const double theta = 0.3;
  for (int l = 1; l <= 4; ++l) {
    // integrate over ln z: E[z^l] = int exp(l u) N(u; theta, sigma^2) du
    const double q = testutil::simpson(
        [&](double u) {
          const double s2 = 0.49;
          return std::exp(l * u) * std::exp(-(u - theta) * (u - theta) / (2.0 * s2)) /
                 std::sqrt(2.0 * M_PI * s2);
        },
        theta - 12.0 * 0.7 + l * 0.49, theta + 14.0 * 0.7 + l * 0.49, 4000);
    CHECK(lognormal_raw_moment(0.7, theta, l) == doctest::Approx(q).epsilon(1e-6));
  }
}

TEST_CASE("lognormal fisher") {
  CHECK(lognormal_fisher(1.0) == 1.0);
  CHECK(lognormal_fisher(0.5) == 4.0);
  double se = 0.0;
  const LogNormalModel m(2.0);
  const double est = mc_fisher(m, 0.4, 1'000'000, 99, &se);
  CHECK(std::abs(est - 0.25) <= 0.01 * 0.25);  // 1% contract
  CHECK(std::abs(est - 0.25) <= 5.0 * se);
}

TEST_CASE("weibull raw moments") {
  CHECK(weibull_raw_moment(1.0, 2.0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(weibull_raw_moment(2.0, 1.0, 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(weibull_raw_moment(3.0, 1.5, 3) == doctest::Approx(3.375).epsilon(1e-14));
}

TEST_CASE("weibull raw moments match quadrature") {
  const WeibullModel m(2.5);
  const double theta = 1.3;
  for (int l = 1; l <= 4; ++l) {
    const double q = testutil::simpson(
        [&](double z) { return std::pow(z, l) * std::exp(m.log_density(z, theta)); }, 1e-9,
        theta * std::pow(60.0, 1.0 / 2.5), 40000);
    CHECK(weibull_raw_moment(2.5, theta, l) == doctest::Approx(q).epsilon(1e-6));
  }
}

TEST_CASE("weibull fisher") {
  CHECK(weibull_fisher(2.0, 1.0) == 4.0);
  CHECK(weibull_fisher(1.0, 2.0) == 0.25);
  double se = 0.0;
  const WeibullModel m(5.0);
  const double est = mc_fisher(m, 0.5, 1'000'000, 12, &se);
  CHECK(std::abs(est - 100.0) <= 1.0);  // 1% contract
  CHECK(std::abs(est - 100.0) <= 5.0 * se);
}

TEST_CASE("gaussian identity fisher") {
  auto cnst = [](double v) { return [v](double) { return v; }; };
  // location family
  CHECK(gaussian_identity_fisher([](double t) { return t; }, cnst(1.0), cnst(4.0), cnst(0.0),
                                 0.7) == doctest::Approx(0.25).epsilon(1e-15));
  // pure variance parameter sigma^2 = theta
  CHECK(gaussian_identity_fisher(cnst(0.0), cnst(0.0), [](double t) { return t; }, cnst(1.0),
                                 2.0) == doctest::Approx(1.0 / 8.0).epsilon(1e-15));
  // mu = theta, sigma^2 = theta^2 at theta = 1: 1 + 4/2 = 3
  CHECK(gaussian_identity_fisher([](double t) { return t; }, cnst(1.0),
                                 [](double t) { return t * t; }, [](double t) { return 2.0 * t; },
                                 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_identity_fisher(cnst(0.0), cnst(1.0), cnst(-1.0), cnst(0.0), 0.0),
                  NonPositiveVariance);
}

TEST_CASE("natural parameters and sufficient statistics") {
  const GaussianModel g = GaussianModel::location(1.0);
  const RealVector w = g.natural_params(0.8);
  CHECK(w[0] == doctest::Approx(0.8));
  CHECK(w[1] == doctest::Approx(-0.5));
  const RealVector t = g.sufficient_stats(1.4);
  CHECK(t[0] == doctest::Approx(1.4));
  CHECK(t[1] == doctest::Approx(1.96));

  const WeibullModel wb(3.0);
  CHECK(wb.sufficient_stats(2.0)[0] == doctest::Approx(8.0));
  CHECK(wb.natural_params(2.0)[0] == doctest::Approx(-0.125));

  const LogNormalModel ln(0.5);
  CHECK(ln.sufficient_stats(std::exp(1.0))[0] == doctest::Approx(1.0));
  CHECK(ln.natural_params(0.7)[0] == doctest::Approx(0.7 / 0.25));

  CHECK_THROWS_AS(wb.sufficient_stats(-1.0), OutOfSupport);
  CHECK_THROWS_AS(wb.natural_params(-1.0), OutOfSupport);
  CHECK_THROWS_AS(ln.sufficient_stats(0.0), OutOfSupport);
}

TEST_CASE("exponential family reconstruction w.t - lambda + kappa = log density") {
  const LogNormalModel ln(0.8);
  const WeibullModel wb(2.7);
  const GaussianModel ga(
      [](double t) { return 0.5 * t + 1.0; }, [](double) { return 0.5; },
      [](double t) { return 1.0 + t * t; }, [](double t) { return 2.0 * t; });
  const ExpFamilyModel* models[] = {&ln, &wb, &ga};

  Rng rng(2024);
  for (const ExpFamilyModel* m : models) {
    for (int rep = 0; rep < 100; ++rep) {
      const double theta =
          m->parameter_space().lo >= 0.0 ? 0.2 + 3.0 * rng.uniform01() : 4.0 * rng.uniform01() - 2.0;
      const double z = m->from_noise(theta, m->draw_noise(rng));
      const RealVector w = m->natural_params(theta);
      const RealVector t = m->sufficient_stats(z);
      double dot = 0.0;
      for (std::size_t l = 0; l < w.size(); ++l) dot += w[l] * t[l];
      const double recon = dot - m->log_normalizer(theta) + m->carrier(z);
      CHECK(recon == doctest::Approx(m->log_density(z, theta)).epsilon(1e-10));
    }
  }
}

TEST_CASE("score has zero Monte-Carlo mean") {
  const LogNormalModel ln(1.0);
  const WeibullModel wb(3.0);
  const GaussianModel ga = GaussianModel::location(2.0);
  const ExpFamilyModel* models[] = {&ln, &wb, &ga};
  const double thetas[] = {0.4, 1.5, -0.3};
  int idx = 0;
  for (const ExpFamilyModel* m : models) {
    const double theta = m->parameter_space().lo >= 0.0 ? 1.5 : thetas[idx];
    const std::size_t n = 1'000'000;
    const std::vector<double> z = m->sample(theta, n, 5 + idx);
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (double v : z) {
      const double s = m->score(v, theta);
      ++k;
      const double d = s - mean;
      mean += d / static_cast<double>(k);
      m2 += d * (s - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    CHECK(std::abs(mean) <= 5.0 * se);
    ++idx;
  }
}

TEST_CASE("fisher identity reproduces the exact closed forms") {
  const LogNormalModel ln(0.5);
  for (double theta : {-1.0, 0.0, 0.7, 2.0})
    CHECK(fisher_identity(ln, theta) == doctest::Approx(4.0).epsilon(1e-6));

  const WeibullModel wb(3.0);
  CHECK(fisher_identity(wb, 2.0) == doctest::Approx(2.25).epsilon(1e-12));
  for (double theta : {0.5, 1.0, 1.7, 3.2})
    CHECK(fisher_identity(wb, theta) ==
          doctest::Approx(weibull_fisher(3.0, theta)).epsilon(1e-6));

  const GaussianModel loc = GaussianModel::location(1.0);
  CHECK(fisher_identity(loc, 0.3) == doctest::Approx(1.0).epsilon(1e-12));

  const GaussianModel ga(
      [](double t) { return t; }, [](double) { return 1.0; },
      [](double t) { return t * t; }, [](double t) { return 2.0 * t; });
  for (double theta : {0.5, 1.0, 2.0})
    CHECK(fisher_identity(ga, theta) == doctest::Approx(ga.fisher(theta)).epsilon(1e-6));
}

TEST_CASE("sampling contracts") {
  const WeibullModel wb(1.0);
  const std::vector<double> z = wb.sample(1.0, 1'000'000, 7);
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  CHECK(std::abs(mean - 1.0) <= 0.005);

  const LogNormalModel ln(1.0);
  const std::vector<double> y = ln.sample(0.0, 1'000'000, 8);
  double lmean = 0.0;
  for (double v : y) lmean += std::log(v);
  lmean /= static_cast<double>(y.size());
  CHECK(std::abs(lmean) <= 0.005);

  // determinism
  CHECK(wb.sample(1.3, 1, 123)[0] == wb.sample(1.3, 1, 123)[0]);
  CHECK(ln.sample(0.2, 3, 55) == ln.sample(0.2, 3, 55));
  // samplers never emit an exact zero
  for (double v : wb.sample(0.01, 10000, 3)) CHECK(v > 0.0);
}

TEST_CASE("moment sets: closed-form derivatives match central differences") {
  const LogNormalModel ln(0.6);
  const WeibullModel wb(2.2);
  const GaussianModel ga(
      [](double t) { return std::sin(t) + 2.0 * t; }, [](double t) { return std::cos(t) + 2.0; },
      [](double t) { return 1.0 + 0.5 * t * t; }, [](double t) { return t; });
  const ExpFamilyModel* models[] = {&ln, &wb, &ga};
  for (const ExpFamilyModel* m : models) {
    for (double theta : {0.5, 1.0, 2.0}) {
      const MomentSet ms = m->moment_set(theta);
      const double d1 =
          central_diff([&](double t) { return m->moment_set(t).mu1; }, theta, 1e-5);
      const double d2 =
          central_diff([&](double t) { return m->moment_set(t).mu2; }, theta, 1e-5);
      CHECK(ms.dmu1 == doctest::Approx(d1).epsilon(1e-6));
      if (std::abs(ms.dmu2) > 1e-12) CHECK(ms.dmu2 == doctest::Approx(d2).epsilon(1e-6));
      // feasibility
      CHECK(ms.mu4bar >= 1.0 + ms.mu3bar * ms.mu3bar - 1e-9);
    }
  }
}

TEST_CASE("closed-form statistic moments agree with Monte Carlo") {
  const LogNormalModel ln(0.8);
  const StatisticSpec specs[] = {StatisticSpec::power(2), StatisticSpec::log(),
                                 StatisticSpec::log_squared(), StatisticSpec::absolute()};
  const double theta = 0.4;
  const std::vector<double> z = ln.sample(theta, 2'000'000, 31);
  for (const StatisticSpec& s : specs) {
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (double v : z) {
      const double p = s(v);
      ++k;
      const double d = p - mean;
      mean += d / static_cast<double>(k);
      m2 += d * (p - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(z.size() - 1) /
                                static_cast<double>(z.size()));
    CHECK(std::abs(ln.stat_mean(s, theta) - mean) <= 6.0 * se);
  }
  // derivative closed forms vs central differences
  for (const StatisticSpec& s : specs)
    CHECK(ln.stat_mean_deriv(s, theta) ==
          doctest::Approx(central_diff([&](double t) { return ln.stat_mean(s, t); }, theta, 1e-6))
              .epsilon(1e-7));

  // unsupported combinations are rejected by name
  const GaussianModel loc = GaussianModel::location(1.0);
  CHECK_THROWS_AS(loc.stat_mean(StatisticSpec::log(), 0.0), UnsupportedStatistic);
  const WeibullModel wb(2.0);
  CHECK_THROWS_AS(wb.stat_cross_moment(StatisticSpec::log(), StatisticSpec::power(1), 1.0),
                  UnsupportedStatistic);
}

TEST_CASE("density integrates to one") {
  const LogNormalModel ln(0.5);
  const double total = testutil::simpson(
      [&](double u) {  // substitute z = e^u
        const double z = std::exp(u);
        return std::exp(ln.log_density(z, 0.3)) * z;
      },
      0.3 - 8.0 * 0.5, 0.3 + 8.0 * 0.5, 2000);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  const WeibullModel wb(2.0);
  const double tw = testutil::simpson(
      [&](double z) { return std::exp(wb.log_density(z, 1.0)); }, 1e-9, 7.0, 4000);
  CHECK(tw == doctest::Approx(1.0).epsilon(1e-6));
}
