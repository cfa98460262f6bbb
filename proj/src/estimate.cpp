#include "fisherbound/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fisherbound/detail/format.hpp"
#include "fisherbound/detail/parallel.hpp"

namespace fisherbound {

CompressedSample compress(const std::vector<double>& data, std::vector<StatisticSpec> stats) {
  if (data.empty()) throw EmptyData("compress: empty data");
  if (stats.empty()) throw Error("compress: no statistics");
  CompressedSample out;
  out.phi_bar.assign(stats.size(), 0.0);
  RealVector phi(stats.size());
  std::uint64_t k = 0;
  for (double z : data) {
    ++k;
    for (std::size_t l = 0; l < stats.size(); ++l) phi[l] = stats[l](z);
    for (std::size_t l = 0; l < stats.size(); ++l)
      out.phi_bar[l] += (phi[l] - out.phi_bar[l]) / static_cast<double>(k);
  }
  out.stats = std::move(stats);
  out.n = data.size();
  return out;
}

ClosedFormSource::ClosedFormSource(const ExpFamilyModel& model, std::vector<StatisticSpec> stats)
    : model_(&model), stats_(std::move(stats)) {
  if (stats_.empty()) throw Error("ClosedFormSource: no statistics");
}

PointMoments ClosedFormSource::at(double theta) const {
  return closed_form_point(*model_, stats_, theta);
}

ProfileSource::ProfileSource(const MomentProfile& profile) : profile_(&profile) {
  profile.validate();
  if (!profile.points.empty() && profile.points.front().dmu.cols() != 1)
    throw DimensionMismatch("ProfileSource: scalar parameter expected");
}

PointMoments ProfileSource::at(double theta) const {
  const RealVector& grid = profile_->theta_grid;
  if (theta < grid.front() || theta > grid.back())
    throw OutOfGrid("ProfileSource: theta=" + std::to_string(theta) + " outside grid [" +
                    std::to_string(grid.front()) + ", " + std::to_string(grid.back()) + "]");
  const auto hi_it = std::lower_bound(grid.begin(), grid.end(), theta);
  std::size_t hi = static_cast<std::size_t>(hi_it - grid.begin());
  if (hi == 0) return profile_->points.front();
  if (grid[hi] == theta) return profile_->points[hi];
  const std::size_t lo = hi - 1;
  const double t = (theta - grid[lo]) / (grid[hi] - grid[lo]);

  const PointMoments& a = profile_->points[lo];
  const PointMoments& b = profile_->points[hi];
  const int l = static_cast<int>(a.mu.size());
  RealVector mu(l);
  Matrix dmu(l, 1);
  SymMatrix cov(l);
  for (int i = 0; i < l; ++i) {
    mu[i] = (1.0 - t) * a.mu[i] + t * b.mu[i];
    dmu(i, 0) = (1.0 - t) * a.dmu(i, 0) + t * b.dmu(i, 0);
    for (int j = i; j < l; ++j) cov.set(i, j, (1.0 - t) * a.cov(i, j) + t * b.cov(i, j));
  }
  return PointMoments{std::move(mu), std::move(dmu), std::move(cov)};
}

WeightFn optimal_weight_fn(const MomentSource& source) {
  return [&source](double theta) {
    const PointMoments pt = source.at(theta);
    BoundReport rep = strong_bound(pt);
    // sign convention b^T dmu > 0; the positive square root in the
    // normalizer already provides it, enforce anyway
    double btd = 0.0;
    for (std::size_t l = 0; l < rep.weights.size(); ++l) btd += rep.weights[l] * pt.dmu(static_cast<int>(l), 0);
    if (btd < 0.0)
      for (double& w : rep.weights) w = -w;
    return rep.weights;
  };
}

MeanFn mean_fn(const MomentSource& source) {
  return [&source](double theta) { return source.at(theta).mu; };
}

double asymptotic_variance(const PointMoments& pt, const RealVector& b) {
  const int l = static_cast<int>(pt.mu.size());
  if (static_cast<int>(b.size()) != l)
    throw DimensionMismatch("asymptotic_variance: weight length mismatch");
  double btd = 0.0, brb = 0.0;
  for (int i = 0; i < l; ++i) {
    btd += b[i] * pt.dmu(i, 0);
    for (int j = 0; j < l; ++j) brb += b[i] * pt.cov(i, j) * b[j];
  }
  if (btd == 0.0) throw Error("asymptotic_variance: b^T dmu is zero");
  return brb / (btd * btd);
}

namespace {

constexpr int kScanPoints = 256;

double score_of(const CompressedSample& sample, const MeanFn& mu_fn, const WeightFn& weight_fn,
                double theta) {
  const RealVector mu = mu_fn(theta);
  const RealVector b = weight_fn(theta);
  if (mu.size() != sample.phi_bar.size() || b.size() != sample.phi_bar.size())
    throw DimensionMismatch("cmle_solve: mu/weight length does not match compressed sample");
  double g = 0.0;
  for (std::size_t l = 0; l < b.size(); ++l) g += b[l] * (sample.phi_bar[l] - mu[l]);
  if (!std::isfinite(g)) throw NonFinite("cmle_solve: non-finite score at theta=" + std::to_string(theta));
  return g;
}

}  // namespace

CmleResult cmle_solve(const CompressedSample& sample, const MeanFn& mu_fn,
                      const WeightFn& weight_fn, Bracket bracket) {
  if (!(bracket.lo < bracket.hi)) throw Error("cmle_solve: invalid bracket");
  auto g = [&](double theta) { return score_of(sample, mu_fn, weight_fn, theta); };

  RealVector thetas(kScanPoints), values(kScanPoints);
  double gmax = 0.0;
  for (int i = 0; i < kScanPoints; ++i) {
    thetas[i] = bracket.lo + (bracket.hi - bracket.lo) * i / (kScanPoints - 1);
    values[i] = g(thetas[i]);
    gmax = std::max(gmax, std::abs(values[i]));
  }
  const double g_tol = 1e-10 * (1.0 + gmax);

  std::vector<int> changes;
  for (int i = 0; i + 1 < kScanPoints; ++i)
    if (values[i] == 0.0 || values[i] * values[i + 1] < 0.0) changes.push_back(i);

  CmleResult result;
  result.sign_changes = static_cast<int>(changes.size());

  if (changes.empty()) {
    int best = 0;
    for (int i = 1; i < kScanPoints; ++i)
      if (std::abs(values[i]) < std::abs(values[best])) best = i;
    if (std::abs(values[best]) <= g_tol) {
      result.theta_hat = thetas[best];
      return result;
    }
    throw NoRootInBracket("cmle_solve: no sign change on [" + detail::format_g17(bracket.lo) +
                          ", " + detail::format_g17(bracket.hi) + "]; g(lo)=" +
                          detail::format_g17(values.front()) + ", g(hi)=" +
                          detail::format_g17(values.back()));
  }

  auto refine = [&](int seg, int& iters) {
    double a = thetas[seg], b = thetas[seg + 1];
    double ga = values[seg], gb = values[seg + 1];
    if (ga == 0.0) return a;
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
      ++iters;
      // secant candidate, fall back to bisection when outside or stalled
      double c = (gb != ga) ? b - gb * (b - a) / (gb - ga) : mid;
      if (!(c > a && c < b)) c = mid;
      const double gc = g(c);
      if (std::abs(gc) <= g_tol || (b - a) <= 1e-10 * (std::abs(a) + std::abs(b)) / 2.0 + 1e-300)
        return c;
      if (ga * gc < 0.0) {
        b = c;
        gb = gc;
      } else {
        a = c;
        ga = gc;
      }
      mid = 0.5 * (a + b);
    }
    return mid;
  };

  if (changes.size() == 1) {
    result.theta_hat = refine(changes.front(), result.iterations);
    return result;
  }

  // Several roots: pick the one closest to the scan minimizer of g^2.
  result.multiple_roots = true;
  int best_scan = 0;
  for (int i = 1; i < kScanPoints; ++i)
    if (values[i] * values[i] < values[best_scan] * values[best_scan]) best_scan = i;
  double best_root = 0.0, best_dist = std::numeric_limits<double>::infinity();
  for (int seg : changes) {
    const double root = refine(seg, result.iterations);
    const double dist = std::abs(root - thetas[best_scan]);
    if (dist < best_dist) {
      best_dist = dist;
      best_root = root;
    }
  }
  result.theta_hat = best_root;
  return result;
}

double gmm_objective(double theta, const CompressedSample& sample, const MeanFn& mu_fn,
                     const std::function<SymMatrix(double)>& d_matrix_fn) {
  const RealVector mu = mu_fn(theta);
  const SymMatrix d = d_matrix_fn(theta);
  const int l = static_cast<int>(sample.phi_bar.size());
  if (static_cast<int>(mu.size()) != l || d.order() != l)
    throw DimensionMismatch("gmm_objective: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j)
      acc += (sample.phi_bar[i] - mu[i]) * d(i, j) * (sample.phi_bar[j] - mu[j]);
  return acc;
}

GmmResult gmm_minimize(const CompressedSample& sample, const MeanFn& mu_fn,
                       const std::function<SymMatrix(double)>& d_matrix_fn, Bracket bracket) {
  if (!(bracket.lo < bracket.hi)) throw Error("gmm_minimize: invalid bracket");
  auto f = [&](double theta) { return gmm_objective(theta, sample, mu_fn, d_matrix_fn); };

  int best = 0;
  RealVector thetas(kScanPoints), values(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    thetas[i] = bracket.lo + (bracket.hi - bracket.lo) * i / (kScanPoints - 1);
    values[i] = f(thetas[i]);
    if (values[i] < values[best]) best = i;
  }
  double a = thetas[std::max(best - 1, 0)];
  double b = thetas[std::min(best + 1, kScanPoints - 1)];

  GmmResult out;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while ((b - a) > 1e-12 * (std::abs(a) + std::abs(b)) / 2.0 + 1e-300 && out.iterations < 300) {
    ++out.iterations;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  out.theta_hat = 0.5 * (a + b);
  return out;
}

Bracket default_bracket(const MomentSource& source, double theta_hint) {
  double lo = source.theta_min(), hi = source.theta_max();
  if (std::isfinite(lo) && std::isfinite(hi)) return {lo, hi};  // profile grid extent
  if (theta_hint > 0.0 && lo >= 0.0) {
    return {std::max(lo, theta_hint / 10.0), std::min(hi, theta_hint * 10.0)};
  }
  // location-type parameter: additive window
  return {std::max(lo, theta_hint - 10.0), std::min(hi, theta_hint + 10.0)};
}

EstimationReport asymptotic_check(const SampleDraw& draw, const MomentSource& source,
                                  const AsymptoticConfig& cfg, const WeightFn* custom_weights) {
  if (cfg.trials < 2) throw Error("asymptotic_check: trials must be >= 2");
  const Bracket bracket =
      cfg.bracket.lo < cfg.bracket.hi ? cfg.bracket : default_bracket(source, cfg.theta_true);

  const WeightFn weights = custom_weights ? *custom_weights : optimal_weight_fn(source);
  const MeanFn means = mean_fn(source);

  const PointMoments pt_true = source.at(cfg.theta_true);
  double predicted;
  if (custom_weights) {
    predicted = asymptotic_variance(pt_true, (*custom_weights)(cfg.theta_true)) /
                static_cast<double>(cfg.n_per_trial);
  } else {
    predicted = 1.0 / (strong_bound(pt_true).scalar() * static_cast<double>(cfg.n_per_trial));
  }

  struct Trial {
    double theta = 0.0;
    int iterations = 0;
    bool failed = false;
    std::string message;
  };
  std::vector<Trial> trials(cfg.trials);

  detail::parallel_for(cfg.trials, [&](std::size_t t) {
    try {
      Rng rng = Rng::stream(cfg.seed, t);
      std::vector<double> data(cfg.n_per_trial);
      for (auto& z : data) z = draw(cfg.theta_true, rng);
      const CompressedSample sample = compress(data, source.stats());
      const CmleResult r = cmle_solve(sample, means, weights, bracket);
      trials[t].theta = r.theta_hat;
      trials[t].iterations = r.iterations;
    } catch (const Error& e) {
      trials[t].failed = true;
      trials[t].message = e.what();
    }
  });

  EstimationReport rep;
  rep.n_per_trial = cfg.n_per_trial;
  rep.trials = cfg.trials;
  rep.predicted_var = predicted;
  std::string failure_detail;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    if (trials[t].failed) {
      ++rep.failures;
      if (rep.failures <= 5)
        failure_detail += " [trial " + std::to_string(t) + "] " + trials[t].message;
      continue;
    }
    rep.estimates.push_back(trials[t].theta);
    rep.iterations.push_back(trials[t].iterations);
  }
  if (rep.failures * 100 > cfg.trials)
    throw SolverFailure("asymptotic_check: " + std::to_string(rep.failures) + "/" +
                        std::to_string(cfg.trials) + " trials failed:" + failure_detail);

  double mean = 0.0;
  for (double v : rep.estimates) mean += v;
  mean /= static_cast<double>(rep.estimates.size());
  double var = 0.0;
  for (double v : rep.estimates) var += (v - mean) * (v - mean);
  var /= static_cast<double>(rep.estimates.size() - 1);
  rep.bias = mean - cfg.theta_true;
  rep.empirical_var = var;
  return rep;
}

EstimationReport asymptotic_check(const ExpFamilyModel& model,
                                  const std::vector<StatisticSpec>& stats,
                                  const AsymptoticConfig& cfg, const WeightFn* custom_weights) {
  const ClosedFormSource source(model, stats);
  const SampleDraw draw = [&model](double theta, Rng& rng) {
    return model.from_noise(theta, model.draw_noise(rng));
  };
  return asymptotic_check(draw, source, cfg, custom_weights);
}

void write_estimation_csv(const EstimationReport& report, std::ostream& out) {
  out << "trial,theta_hat,iterations\n";
  for (std::size_t t = 0; t < report.estimates.size(); ++t)
    out << t << ',' << detail::format_g17(report.estimates[t]) << ',' << report.iterations[t]
        << '\n';
  out << '\n';
  out << "bias,empirical_var,predicted_var,ratio\n";
  out << detail::format_g17(report.bias) << ',' << detail::format_g17(report.empirical_var) << ','
      << detail::format_g17(report.predicted_var) << ','
      << detail::format_g17(report.empirical_var / report.predicted_var) << '\n';
}

}  // namespace fisherbound
