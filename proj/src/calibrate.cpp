#include "fisherbound/calibrate.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fisherbound/detail/format.hpp"
#include "fisherbound/detail/parallel.hpp"

namespace fisherbound {

double rapp_forward(double x, double rho) {
  if (!(rho > 0.0)) throw Error("rapp_forward: rho must be positive");
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  const double sign = x > 0.0 ? 1.0 : -1.0;
  double mag;
  if (ax <= 1.0) {
    mag = ax * std::exp(-std::log1p(std::pow(ax, 2.0 * rho)) / (2.0 * rho));
  } else {
    // factor out |x| so |x|^(2 rho) cannot overflow
    mag = std::exp(-std::log1p(std::pow(1.0 / ax, 2.0 * rho)) / (2.0 * rho));
  }
  // keep |y| < 1 even when the correction term underflows
  if (mag >= 1.0) mag = 0x1.fffffffffffffp-1;
  return sign * mag;
}

double reference_input_fisher(double /*theta*/, double input_variance) {
  if (!(input_variance > 0.0))
    throw NonPositiveVariance("reference_input_fisher: input variance must be positive");
  return 1.0 / input_variance;
}

RappSystem::RappSystem(double rho) : rho_(rho) {
  if (!(rho > 0.0)) throw Error("RappSystem: rho must be positive");
}

void LearnConfig::validate() const {
  if (theta_grid.empty()) throw Error("LearnConfig: empty theta grid");
  for (std::size_t i = 1; i < theta_grid.size(); ++i)
    if (!(theta_grid[i] > theta_grid[i - 1]))
      throw Error("LearnConfig: theta grid not strictly increasing at index " + std::to_string(i));
  if (stats.empty()) throw Error("LearnConfig: no statistics");
  if (samples_per_point < 1000) throw Error("LearnConfig: samples_per_point must be >= 1000");
  if (!(diff_step > 0.0)) throw Error("LearnConfig: diff_step must be positive");
}

namespace {

void eval_stats_into(const std::vector<StatisticSpec>& stats, double z, RealVector& out,
                     std::uint64_t* clamps) {
  for (std::size_t l = 0; l < stats.size(); ++l) out[l] = stats[l](z, clamps);
}

struct PointEstimate {
  RealVector mu;
  RealVector dmu;
  SymMatrix cov;
  double jitter = 0.0;
  std::uint64_t clamps = 0;
};

PointEstimate estimate_point(const BlackBoxSystem& system, const LearnConfig& cfg,
                             std::size_t grid_index) {
  const double theta = cfg.theta_grid[grid_index];
  const std::size_t l = cfg.stats.size();
  const std::uint64_t n = cfg.samples_per_point;

  PointEstimate est{RealVector(l, 0.0), RealVector(l, 0.0), SymMatrix(static_cast<int>(l))};

  // Center pass: Welford mean + centered sums of products.
  RealVector mean(l, 0.0), d_old(l), d_new(l), phi(l);
  std::vector<double> co(l * (l + 1) / 2, 0.0);
  Rng rng_center = Rng::stream(cfg.seed, 3 * grid_index);
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double y = system.map(theta, system.draw_noise(rng_center));
    eval_stats_into(cfg.stats, y, phi, &est.clamps);
    for (std::size_t i = 0; i < l; ++i) {
      d_old[i] = phi[i] - mean[i];
      mean[i] += d_old[i] / static_cast<double>(k);
      d_new[i] = phi[i] - mean[i];
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = i; j < l; ++j) co[idx++] += d_old[i] * d_new[j];
  }
  est.mu = mean;
  {
    std::size_t idx = 0;
    const double div = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = i; j < l; ++j) {
        const double v = co[idx++] / div;
        if (!std::isfinite(v))
          throw NonFinite("learn_profile: non-finite covariance at theta=" +
                          std::to_string(theta));
        est.cov.set(static_cast<int>(i), static_cast<int>(j), v);
      }
  }
  for (std::size_t i = 0; i < l; ++i)
    if (est.cov(static_cast<int>(i), static_cast<int>(i)) < 1e-14)
      throw DegenerateStatistic("learn_profile: statistic " + cfg.stats[i].label() +
                                " has no sample variance at theta=" + std::to_string(theta));

  // Derivative pass: central difference with (optionally) common random numbers.
  const double h = cfg.diff_step;
  RealVector mean_p(l, 0.0), mean_m(l, 0.0);
  if (cfg.crn) {
    Rng rng_d = Rng::stream(cfg.seed, 3 * grid_index + 1);
    for (std::uint64_t k = 1; k <= n; ++k) {
      const double w = system.draw_noise(rng_d);
      eval_stats_into(cfg.stats, system.map(theta + h, w), phi, &est.clamps);
      for (std::size_t i = 0; i < l; ++i) mean_p[i] += (phi[i] - mean_p[i]) / static_cast<double>(k);
      eval_stats_into(cfg.stats, system.map(theta - h, w), phi, &est.clamps);
      for (std::size_t i = 0; i < l; ++i) mean_m[i] += (phi[i] - mean_m[i]) / static_cast<double>(k);
    }
  } else {
    Rng rng_p = Rng::stream(cfg.seed, 3 * grid_index + 1);
    Rng rng_m = Rng::stream(cfg.seed, 3 * grid_index + 2);
    for (std::uint64_t k = 1; k <= n; ++k) {
      eval_stats_into(cfg.stats, system.observe(theta + h, rng_p), phi, &est.clamps);
      for (std::size_t i = 0; i < l; ++i) mean_p[i] += (phi[i] - mean_p[i]) / static_cast<double>(k);
      eval_stats_into(cfg.stats, system.observe(theta - h, rng_m), phi, &est.clamps);
      for (std::size_t i = 0; i < l; ++i) mean_m[i] += (phi[i] - mean_m[i]) / static_cast<double>(k);
    }
  }
  for (std::size_t i = 0; i < l; ++i) {
    est.dmu[i] = (mean_p[i] - mean_m[i]) / (2.0 * h);
    if (!std::isfinite(est.dmu[i]) || !std::isfinite(est.mu[i]))
      throw NonFinite("learn_profile: non-finite moment estimate at theta=" +
                      std::to_string(theta));
  }

  // PSD repair: same jitter policy as the solver, baked into the stored
  // covariance (relative to the diagonal) and recorded.
  try {
    SpdFactor f = SpdFactor::make(est.cov);
    est.jitter = f.jitter();
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite("learn_profile: covariance repair failed at theta=" +
                              std::to_string(theta) + ": " + e.what());
  }
  if (est.jitter > 0.0)
    for (std::size_t i = 0; i < l; ++i) {
      const int ii = static_cast<int>(i);
      est.cov.set(ii, ii, est.cov(ii, ii) * (1.0 + est.jitter));
    }
  return est;
}

}  // namespace

MomentProfile learn_profile(const BlackBoxSystem& system, const LearnConfig& cfg,
                            LearnDiagnostics* diag) {
  cfg.validate();
  const std::size_t points = cfg.theta_grid.size();
  std::vector<PointEstimate> est;
  est.reserve(points);
  for (std::size_t i = 0; i < points; ++i)
    est.push_back(PointEstimate{RealVector(), RealVector(), SymMatrix(1)});
  detail::parallel_for(points,
                       [&](std::size_t i) { est[i] = estimate_point(system, cfg, i); });

  MomentProfile profile;
  profile.stats = cfg.stats;
  profile.theta_grid = cfg.theta_grid;
  profile.provenance = {Provenance::Kind::monte_carlo, cfg.samples_per_point, cfg.seed,
                        cfg.diff_step, cfg.crn};
  std::uint64_t clamps = 0;
  for (std::size_t i = 0; i < points; ++i) {
    profile.points.push_back(
        PointMoments{std::move(est[i].mu), Matrix::column(est[i].dmu), std::move(est[i].cov)});
    profile.jitter.push_back(est[i].jitter);
    clamps += est[i].clamps;
  }
  if (diag) diag->log_clamp_events = clamps;
  profile.validate();
  return profile;
}

// ---------------------------------------------------------------------------
// Profile persistence

namespace {

constexpr const char* kMagic = "fisherbound-profile";
constexpr const char* kVersionLine = "fisherbound-profile v1";

std::string join17(const RealVector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += detail::format_g17(v[i]);
  }
  return s;
}

double parse_number(const std::string& text, int line, const std::string& field) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw FormatError("profile line " + std::to_string(line) + ": field '" + field +
                      "': cannot parse number '" + text + "'");
  if (!std::isfinite(v))
    throw FormatError("profile line " + std::to_string(line) + ": field '" + field +
                      "': non-finite value '" + text + "'");
  return v;
}

RealVector parse_number_list(const std::string& text, int line, const std::string& field) {
  RealVector out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    out.push_back(parse_number(text.substr(pos, next - pos), line, field));
    pos = next + 1;
  }
  return out;
}

std::string expect_field(const std::string& part, const std::string& key, int line) {
  const std::string prefix = key + "=";
  if (part.rfind(prefix, 0) != 0)
    throw FormatError("profile line " + std::to_string(line) + ": expected '" + key +
                      "=...', got '" + part + "'");
  return part.substr(prefix.size());
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      parts.push_back(s.substr(pos));
      return parts;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

}  // namespace

void save_profile(const MomentProfile& profile, std::ostream& out) {
  profile.validate();
  const int l = profile.stat_count();
  out << kVersionLine << '\n';
  out << "stats: " << stat_list_label(profile.stats) << '\n';
  if (profile.provenance.kind == Provenance::Kind::closed_form) {
    out << "provenance: closed_form\n";
  } else {
    out << "provenance: monte_carlo samples=" << profile.provenance.samples
        << " seed=" << profile.provenance.seed
        << " diff_step=" << detail::format_g17(profile.provenance.diff_step)
        << " crn=" << (profile.provenance.crn ? 1 : 0) << '\n';
  }
  for (std::size_t i = 0; i < profile.points.size(); ++i) {
    const PointMoments& pt = profile.points[i];
    if (pt.dmu.cols() != 1)
      throw FormatError("save_profile: file format supports a scalar parameter (M=1)");
    RealVector dmu(l);
    for (int r = 0; r < l; ++r) dmu[r] = pt.dmu(r, 0);
    out << "theta=" << detail::format_g17(profile.theta_grid[i]) << "; mu=" << join17(pt.mu)
        << "; dmu=" << join17(dmu) << "; cov_upper=" << join17(pt.cov.upper())
        << "; jitter=" << detail::format_g17(profile.jitter[i]) << '\n';
  }
}

void save_profile(const MomentProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("save_profile: cannot open '" + path + "' for writing");
  save_profile(profile, out);
  if (!out) throw FormatError("save_profile: write to '" + path + "' failed");
}

MomentProfile load_profile(std::istream& in) {
  std::string line;
  int lineno = 0;

  if (!std::getline(in, line)) throw FormatError("profile: empty input");
  ++lineno;
  if (line != kVersionLine) {
    if (line.rfind(kMagic, 0) == 0)
      throw VersionMismatch("profile: unsupported version '" + line + "'");
    throw FormatError("profile line 1: missing '" + std::string(kVersionLine) + "' header");
  }

  if (!std::getline(in, line)) throw FormatError("profile: missing stats line");
  ++lineno;
  if (line.rfind("stats: ", 0) != 0)
    throw FormatError("profile line 2: expected 'stats: ...'");
  MomentProfile profile;
  try {
    profile.stats = parse_stat_list(line.substr(7));
  } catch (const FormatError& e) {
    throw FormatError("profile line 2: " + std::string(e.what()));
  }
  const int l = profile.stat_count();

  if (!std::getline(in, line)) throw FormatError("profile: missing provenance line");
  ++lineno;
  if (line == "provenance: closed_form") {
    profile.provenance.kind = Provenance::Kind::closed_form;
  } else if (line.rfind("provenance: monte_carlo ", 0) == 0) {
    profile.provenance.kind = Provenance::Kind::monte_carlo;
    const std::vector<std::string> parts = split(line.substr(24), " ");
    if (parts.size() != 4)
      throw FormatError("profile line 3: expected samples=, seed=, diff_step=, crn=");
    profile.provenance.samples =
        static_cast<std::uint64_t>(parse_number(expect_field(parts[0], "samples", 3), 3, "samples"));
    profile.provenance.seed =
        static_cast<std::uint64_t>(parse_number(expect_field(parts[1], "seed", 3), 3, "seed"));
    profile.provenance.diff_step = parse_number(expect_field(parts[2], "diff_step", 3), 3, "diff_step");
    const std::string crn = expect_field(parts[3], "crn", 3);
    if (crn != "0" && crn != "1") throw FormatError("profile line 3: crn must be 0 or 1");
    profile.provenance.crn = crn == "1";
  } else {
    throw FormatError("profile line 3: expected 'provenance: ...'");
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    const std::vector<std::string> parts = split(line, "; ");
    if (parts.size() != 5)
      throw FormatError("profile line " + std::to_string(lineno) +
                        ": expected 5 'key=value' fields");
    const double theta = parse_number(expect_field(parts[0], "theta", lineno), lineno, "theta");
    RealVector mu = parse_number_list(expect_field(parts[1], "mu", lineno), lineno, "mu");
    RealVector dmu = parse_number_list(expect_field(parts[2], "dmu", lineno), lineno, "dmu");
    RealVector cov =
        parse_number_list(expect_field(parts[3], "cov_upper", lineno), lineno, "cov_upper");
    const double jitter = parse_number(expect_field(parts[4], "jitter", lineno), lineno, "jitter");
    if (static_cast<int>(mu.size()) != l || static_cast<int>(dmu.size()) != l)
      throw FormatError("profile line " + std::to_string(lineno) + ": expected " +
                        std::to_string(l) + " mu/dmu entries");
    if (cov.size() != static_cast<std::size_t>(l) * (l + 1) / 2)
      throw FormatError("profile line " + std::to_string(lineno) + ": expected " +
                        std::to_string(l * (l + 1) / 2) + " cov_upper entries");
    if (!profile.theta_grid.empty() && !(theta > profile.theta_grid.back()))
      throw FormatError("profile line " + std::to_string(lineno) +
                        ": theta grid not strictly increasing (row " +
                        std::to_string(profile.theta_grid.size() + 1) + ")");
    profile.theta_grid.push_back(theta);
    profile.points.push_back(
        PointMoments{std::move(mu), Matrix::column(dmu), SymMatrix::from_upper(l, std::move(cov))});
    profile.jitter.push_back(jitter);
  }
  profile.validate();
  return profile;
}

MomentProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_profile: cannot open '" + path + "'");
  return load_profile(in);
}

}  // namespace fisherbound
