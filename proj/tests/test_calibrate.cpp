#include "fisherbound/calibrate.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace fisherbound;

namespace {

// Constant output: every statistic is degenerate.
class ConstantSystem final : public BlackBoxSystem {
public:
  std::string name() const override { return "constant"; }
  double draw_noise(Rng& rng) const override { return rng.normal(); }
  double map(double, double) const override { return 42.0; }
};

// Half of the outputs are exactly zero; exercises the log clamp.
class HalfZeroSystem final : public BlackBoxSystem {
public:
  std::string name() const override { return "halfzero"; }
  double draw_noise(Rng& rng) const override { return rng.normal(); }
  double map(double theta, double noise) const override {
    return noise < 0.0 ? 0.0 : theta + noise;
  }
};

LearnConfig small_config(RealVector grid, std::vector<StatisticSpec> stats, std::uint64_t n,
                         std::uint64_t seed) {
  LearnConfig cfg;
  cfg.theta_grid = std::move(grid);
  cfg.stats = std::move(stats);
  cfg.samples_per_point = n;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("rapp_forward point values") {
  CHECK(rapp_forward(0.0, 1.0) == 0.0);
  CHECK(rapp_forward(0.0, 0.25) == 0.0);
  CHECK(rapp_forward(1.0, 1.0) == doctest::Approx(0.7071067811865475244).epsilon(1e-14));
  CHECK(rapp_forward(2.0, 8.0) == doctest::Approx(0.9999990463334142176).epsilon(1e-12));
  CHECK(rapp_forward(0.5, 2.0) == doctest::Approx(0.4924790605054523265).epsilon(1e-14));
  CHECK_THROWS_AS(rapp_forward(1.0, 0.0), Error);
}

TEST_CASE("rapp_forward saturates strictly below one, odd, monotone") {
  for (double rho : {0.25, 0.5, 1.0, 2.0, 8.0}) {
    double prev = -1.0;
    for (int i = 0; i < 10'000; ++i) {
      const double x = -10.0 + 20.0 * i / 9999.0;
      const double y = rapp_forward(x, rho);
      CHECK(std::abs(y) < 1.0);
      CHECK(y == -rapp_forward(-x, rho));
      CHECK(y >= prev);
      prev = y;
    }
  }
  // extreme inputs stay finite and inside (-1, 1)
  CHECK(rapp_forward(1e300, 8.0) < 1.0);
  CHECK(rapp_forward(1e300, 8.0) > 0.9999);
  CHECK(rapp_forward(-1e300, 0.25) > -1.0);
}

TEST_CASE("reference input fisher") {
  CHECK(reference_input_fisher(0.0) == 1.0);
  CHECK(reference_input_fisher(4.0) == 1.0);
  CHECK(reference_input_fisher(1.0, 4.0) == 0.25);
  CHECK_THROWS_AS(reference_input_fisher(0.0, 0.0), NonPositiveVariance);
}

TEST_CASE("learn_profile on the identity system recovers mean and derivative") {
  const IdentitySystem sys;
  const LearnConfig cfg =
      small_config({3.0}, {StatisticSpec::power(1)}, 1'000'000, 11);
  const MomentProfile p = learn_profile(sys, cfg);
  CHECK(std::abs(p.points[0].mu[0] - 3.0) <= 0.005);        // 5 sigma band
  CHECK(std::abs(p.points[0].dmu(0, 0) - 1.0) <= 0.01);
  CHECK(p.points[0].cov(0, 0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(p.provenance.kind == Provenance::Kind::monte_carlo);
  CHECK(p.provenance.samples == 1'000'000);
}

TEST_CASE("learn_profile on the Rapp system: symmetric input has zero mean output") {
  const RappSystem sys(2.0);
  const MomentProfile p =
      learn_profile(sys, small_config({0.0}, {StatisticSpec::power(1)}, 200'000, 5));
  // |y| < 1 so sd(y) < 1; 5 sigma band
  CHECK(std::abs(p.points[0].mu[0]) <= 5.0 / std::sqrt(200'000.0));
}

TEST_CASE("learn_profile matches Weibull closed forms within Monte-Carlo error") {
  const WeibullModel model(2.0);
  const ModelSystem sys(model);
  const std::vector<StatisticSpec> stats = {StatisticSpec::power(1), StatisticSpec::power(2)};
  const std::uint64_t n = 1'000'000;
  const MomentProfile p = learn_profile(sys, small_config({1.5}, stats, n, 23));
  const PointMoments exact = closed_form_point(model, stats, 1.5);

  // standard errors from exact fourth-order moments:
  // Var(mean phi_l) = R_ll / n; Var(Rhat_ij) ~= E[(c_i c_j)^2] / n with
  // centered c_l, expanded into raw moments.
  auto raw = [&](int l) { return weibull_raw_moment(2.0, 1.5, l); };
  const double m1 = raw(1), m2 = raw(2);
  for (int l = 0; l < 2; ++l) {
    const double se = std::sqrt(exact.cov(l, l) / static_cast<double>(n));
    CHECK(std::abs(p.points[0].mu[l] - exact.mu[l]) <= 5.0 * se);
  }
  // E[(z^i - m_i)^2 (z^j - m_j)^2] via raw moments up to order 8
  auto central_sq = [&](int i, int j) {
    const double mi = raw(i), mj = raw(j);
    // expand (z^i - mi)^2 (z^j - mj)^2
    return raw(2 * i + 2 * j) - 2.0 * mj * raw(2 * i + j) + mj * mj * raw(2 * i) -
           2.0 * mi * (raw(i + 2 * j) - 2.0 * mj * raw(i + j) + mj * mj * raw(i)) +
           mi * mi * (raw(2 * j) - 2.0 * mj * raw(j) + mj * mj);
  };
  (void)m1;
  (void)m2;
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) {
      const double var_r =
          (central_sq(i + 1, j + 1) - exact.cov(i, j) * exact.cov(i, j)) / static_cast<double>(n);
      CHECK(std::abs(p.points[0].cov(i, j) - exact.cov(i, j)) <= 5.0 * std::sqrt(var_r));
    }
  // derivative against the closed form (CRN keeps this tight)
  for (int l = 0; l < 2; ++l)
    CHECK(p.points[0].dmu(l, 0) == doctest::Approx(exact.dmu(l, 0)).epsilon(0.02));
}

TEST_CASE("common random numbers shrink the derivative variance") {
  const IdentitySystem sys;
  std::vector<double> d_crn, d_indep;
  for (int rep = 0; rep < 50; ++rep) {
    LearnConfig cfg = small_config({1.0}, {StatisticSpec::power(1)}, 2000, 1000 + rep);
    cfg.crn = true;
    d_crn.push_back(learn_profile(sys, cfg).points[0].dmu(0, 0));
    cfg.crn = false;
    d_indep.push_back(learn_profile(sys, cfg).points[0].dmu(0, 0));
  }
  auto variance = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
  };
  // identity + CRN: the difference quotient is exactly 1 every time
  CHECK(variance(d_crn) < variance(d_indep));
  CHECK(variance(d_crn) == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("learn_profile is deterministic for a fixed config") {
  const RappSystem sys(1.0);
  const LearnConfig cfg = small_config(
      {0.0, 0.5, 1.0}, {StatisticSpec::power(1), StatisticSpec::absolute()}, 5000, 77);
  const MomentProfile a = learn_profile(sys, cfg);
  const MomentProfile b = learn_profile(sys, cfg);
  std::ostringstream sa, sb;
  save_profile(a, sa);
  save_profile(b, sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("degenerate statistics are rejected by name") {
  const ConstantSystem sys;
  try {
    learn_profile(sys, small_config({1.0}, {StatisticSpec::power(2)}, 1000, 1));
    FAIL("expected DegenerateStatistic");
  } catch (const DegenerateStatistic& e) {
    CHECK(std::string(e.what()).find("pow2") != std::string::npos);
  }
}

TEST_CASE("exact zeros under a log are clamped and counted") {
  const HalfZeroSystem sys;
  LearnDiagnostics diag;
  const MomentProfile p = learn_profile(
      sys, small_config({2.0}, {StatisticSpec::log_abs()}, 2000, 9), &diag);
  CHECK(diag.log_clamp_events > 0);
  CHECK(std::isfinite(p.points[0].mu[0]));
}

TEST_CASE("profile round-trip is lossless and byte-stable") {
  const RappSystem sys(2.0);
  LearnConfig cfg = small_config({0.0, 1.0},
                                 {StatisticSpec::power(1), StatisticSpec::power(2),
                                  StatisticSpec::absolute(), StatisticSpec::log_abs()},
                                 2000, 3);
  cfg.diff_step = 0.02;
  cfg.crn = true;
  const MomentProfile p = learn_profile(sys, cfg);

  std::ostringstream first;
  save_profile(p, first);
  std::istringstream in(first.str());
  const MomentProfile q = load_profile(in);

  CHECK(q.stats == p.stats);
  CHECK(q.theta_grid == p.theta_grid);
  CHECK(q.provenance == p.provenance);
  CHECK(q.jitter == p.jitter);
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    CHECK(q.points[i].mu == p.points[i].mu);
    for (int r = 0; r < p.stat_count(); ++r)
      CHECK(q.points[i].dmu(r, 0) == p.points[i].dmu(r, 0));
    CHECK(q.points[i].cov.upper() == p.points[i].cov.upper());
  }

  std::ostringstream second;
  save_profile(q, second);
  CHECK(second.str() == first.str());
}

TEST_CASE("profile loader rejects malformed input with a locus") {
  const std::string head =
      "fisherbound-profile v1\nstats: pow1\nprovenance: closed_form\n";

  // non-increasing grid names the offending row
  {
    std::istringstream in(head +
                          "theta=1; mu=1; dmu=1; cov_upper=1; jitter=0\n"
                          "theta=1; mu=1; dmu=1; cov_upper=1; jitter=0\n");
    try {
      load_profile(in);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  // NaN / Inf rejected
  {
    std::istringstream in(head + "theta=0; mu=nan; dmu=1; cov_upper=1; jitter=0\n");
    CHECK_THROWS_AS(load_profile(in), FormatError);
  }
  {
    std::istringstream in(head + "theta=0; mu=inf; dmu=1; cov_upper=1; jitter=0\n");
    CHECK_THROWS_AS(load_profile(in), FormatError);
  }
  // wrong field count / wrong entry count
  {
    std::istringstream in(head + "theta=0; mu=1,2; dmu=1; cov_upper=1; jitter=0\n");
    CHECK_THROWS_AS(load_profile(in), FormatError);
  }
  // version mismatch
  {
    std::istringstream in("fisherbound-profile v2\nstats: pow1\nprovenance: closed_form\n");
    CHECK_THROWS_AS(load_profile(in), VersionMismatch);
  }
  // not a profile at all
  {
    std::istringstream in("something else\n");
    CHECK_THROWS_AS(load_profile(in), FormatError);
  }
}

TEST_CASE("closed-form profiles survive the file format exactly") {
  const WeibullModel model(2.0);
  std::vector<StatisticSpec> stats = {StatisticSpec::power(1), StatisticSpec::power(2)};
  RealVector grid;
  for (int i = 0; i < 9; ++i) grid.push_back(0.5 + 0.25 * i);
  const MomentProfile p = closed_form_profile(model, stats, grid);

  std::ostringstream out;
  save_profile(p, out);
  std::istringstream in(out.str());
  const MomentProfile q = load_profile(in);

  const auto curve_p = bound_curve(p), curve_q = bound_curve(q);
  for (std::size_t i = 0; i < curve_p.size(); ++i)
    CHECK(curve_p[i].scalar() == curve_q[i].scalar());  // bitwise identical
}
