// Command-line front end: exact Fisher values, information bounds,
// Monte-Carlo profile learning, compressed-sample estimation, and
// plot-ready CSV reproductions of the reference curves.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "fisherbound/bounds.hpp"
#include "fisherbound/calibrate.hpp"
#include "fisherbound/detail/format.hpp"
#include "fisherbound/estimate.hpp"
#include "fisherbound/expfam.hpp"

namespace fb = fisherbound;
using fb::detail::format_g17;

namespace {

struct OutStream {
  std::ofstream file;
  std::ostream* out = &std::cout;
  explicit OutStream(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw fb::Error("cannot open output file '" + path + "'");
    out = &file;
  }
  std::ostream& get() { return *out; }
};

struct ModelOpts {
  std::string dist;
  double sigma = 1.0;
  double k = 1.0;
};

std::unique_ptr<fb::ExpFamilyModel> make_model(const ModelOpts& o) {
  if (o.dist == "lognormal") return std::make_unique<fb::LogNormalModel>(o.sigma);
  if (o.dist == "weibull") return std::make_unique<fb::WeibullModel>(o.k);
  if (o.dist == "gaussian")
    return std::make_unique<fb::GaussianModel>(fb::GaussianModel::location(o.sigma * o.sigma));
  throw CLI::ValidationError("--dist must be one of gaussian, lognormal, weibull");
}

fb::RealVector linspace(double a, double b, int n) {
  fb::RealVector g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
  return g;
}

std::vector<fb::StatisticSpec> rapp_stats() {
  return {fb::StatisticSpec::power(1), fb::StatisticSpec::power(2), fb::StatisticSpec::power(3),
          fb::StatisticSpec::power(4), fb::StatisticSpec::absolute(),
          fb::StatisticSpec::log_abs()};
}

// ---------------------------------------------------------------------------

int run_info(const ModelOpts& model_opts, double theta, const std::string& out_path) {
  const auto model = make_model(model_opts);
  OutStream os(out_path);
  os.get() << "theta,fisher\n"
           << format_g17(theta) << ',' << format_g17(model->fisher(theta)) << '\n';
  return 0;
}

int run_bound(const ModelOpts& model_opts, bool has_dist, const std::string& stats_csv,
              const fb::RealVector& grid, const std::string& profile_path, double reference_fisher,
              bool has_reference, const std::string& out_path) {
  OutStream os(out_path);
  std::ostream& out = os.get();

  fb::MomentProfile profile;
  std::function<double(double)> exact;
  if (!profile_path.empty()) {
    profile = fb::load_profile(profile_path);
    if (has_reference) exact = [reference_fisher](double) { return reference_fisher; };
  } else {
    if (!has_dist) throw CLI::ValidationError("bound requires --dist or --profile");
    const auto model = make_model(model_opts);
    profile = fb::closed_form_profile(*model, fb::parse_stat_list(stats_csv), grid);
    exact = [&model](double theta) { return model->fisher(theta); };
    const auto reports = fb::bound_curve(profile, exact);
    out << "theta,bound,fisher,chi,chi_db\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
      out << format_g17(profile.theta_grid[i]) << ',' << format_g17(reports[i].scalar()) << ','
          << format_g17(model->fisher(profile.theta_grid[i])) << ','
          << format_g17(*reports[i].chi) << ',' << format_g17(*reports[i].chi_db) << '\n';
    return 0;
  }

  const auto reports = fb::bound_curve(profile, exact);
  if (exact) {
    out << "theta,bound,fisher,chi,chi_db\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
      out << format_g17(profile.theta_grid[i]) << ',' << format_g17(reports[i].scalar()) << ','
          << format_g17(reference_fisher) << ',' << format_g17(*reports[i].chi) << ','
          << format_g17(*reports[i].chi_db) << '\n';
  } else {
    out << "theta,bound\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
      out << format_g17(profile.theta_grid[i]) << ',' << format_g17(reports[i].scalar()) << '\n';
  }
  return 0;
}

int run_learn(const std::string& system_name, double rho, const ModelOpts& model_opts,
              bool has_dist, const std::string& stats_csv, const fb::RealVector& grid,
              std::uint64_t samples, std::uint64_t seed, double diff_step, bool crn,
              const std::string& out_path) {
  std::unique_ptr<fb::ExpFamilyModel> model;
  std::unique_ptr<fb::BlackBoxSystem> system;
  if (system_name == "rapp") {
    system = std::make_unique<fb::RappSystem>(rho);
  } else if (system_name == "identity") {
    system = std::make_unique<fb::IdentitySystem>();
  } else if (system_name.empty() && has_dist) {
    model = make_model(model_opts);
    system = std::make_unique<fb::ModelSystem>(*model);
  } else {
    throw CLI::ValidationError("learn requires --system {rapp|identity} or --dist");
  }

  fb::LearnConfig cfg;
  cfg.theta_grid = grid;
  cfg.stats = fb::parse_stat_list(stats_csv);
  cfg.samples_per_point = samples;
  cfg.seed = seed;
  cfg.diff_step = diff_step;
  cfg.crn = crn;

  fb::LearnDiagnostics diag;
  const fb::MomentProfile profile = fb::learn_profile(*system, cfg, &diag);
  if (diag.log_clamp_events > 0)
    std::cerr << "learn: clamped " << diag.log_clamp_events << " exact zeros under a log\n";

  OutStream os(out_path);
  fb::save_profile(profile, os.get());
  return 0;
}

int run_estimate(const ModelOpts& model_opts, bool has_dist, const std::string& system_name,
                 double rho, const std::string& profile_path, const std::string& stats_csv,
                 double theta_true, std::uint64_t n, std::uint64_t trials, std::uint64_t seed,
                 const std::string& weights_kind, fb::Bracket bracket,
                 const std::string& out_path) {
  OutStream os(out_path);
  fb::AsymptoticConfig cfg;
  cfg.theta_true = theta_true;
  cfg.n_per_trial = n;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.bracket = bracket;

  std::unique_ptr<fb::ExpFamilyModel> model;
  fb::MomentProfile profile;
  std::unique_ptr<fb::MomentSource> source;
  fb::SampleDraw draw;

  if (!profile_path.empty()) {
    if (system_name != "rapp" && system_name != "identity")
      throw CLI::ValidationError("estimate --profile requires --system {rapp|identity}");
    profile = fb::load_profile(profile_path);
    source = std::make_unique<fb::ProfileSource>(profile);
    if (system_name == "rapp") {
      auto system = std::make_shared<fb::RappSystem>(rho);
      draw = [system](double theta, fb::Rng& rng) { return system->observe(theta, rng); };
    } else {
      auto system = std::make_shared<fb::IdentitySystem>();
      draw = [system](double theta, fb::Rng& rng) { return system->observe(theta, rng); };
    }
  } else if (has_dist) {
    model = make_model(model_opts);
    source = std::make_unique<fb::ClosedFormSource>(*model, fb::parse_stat_list(stats_csv));
    const fb::ExpFamilyModel* m = model.get();
    draw = [m](double theta, fb::Rng& rng) { return m->from_noise(theta, m->draw_noise(rng)); };
  } else {
    throw CLI::ValidationError("estimate requires --dist or --profile");
  }

  fb::EstimationReport report;
  if (weights_kind == "ones") {
    const int l = static_cast<int>(source->stats().size());
    const fb::WeightFn ones = [l](double) { return fb::RealVector(l, 1.0); };
    report = fb::asymptotic_check(draw, *source, cfg, &ones);
  } else if (weights_kind == "optimal") {
    report = fb::asymptotic_check(draw, *source, cfg);
  } else {
    throw CLI::ValidationError("--weights must be optimal or ones");
  }
  fb::write_estimation_csv(report, os.get());
  return 0;
}

// ---------------------------------------------------------------------------
// Figure reproductions

void emit_two_moment_curve(std::ostream& out, const std::string& xname,
                           const fb::RealVector& xs,
                           const std::function<fb::TwoMomentBound(double)>& bound_at,
                           const std::function<double(double)>& fisher_at) {
  out << xname << ",chi_db\n";
  for (double x : xs) {
    const fb::LossRatio lr = fb::loss_chi(bound_at(x).value, fisher_at(x));
    out << format_g17(x) << ',' << format_g17(lr.chi_db) << '\n';
  }
}

int run_reproduce(const std::string& figure, const std::string& dist, double sigma_max, int steps,
                  double rho, std::uint64_t samples, std::uint64_t seed,
                  const std::string& out_path) {
  OutStream os(out_path);
  std::ostream& out = os.get();

  auto power_set = [](int l) {
    std::vector<fb::StatisticSpec> s;
    for (int i = 1; i <= l; ++i) s.push_back(fb::StatisticSpec::power(i));
    return s;
  };

  if (figure == "fig1") {
    const fb::RealVector sigmas = linspace(0.2, sigma_max, steps > 0 ? steps : 181);
    emit_two_moment_curve(
        out, "sigma", sigmas,
        [](double s) { return fb::two_moment_bound(fb::LogNormalModel(s).moment_set(0.0)); },
        [](double s) { return fb::lognormal_fisher(s); });
    return 0;
  }
  if (figure == "fig2") {
    const fb::RealVector ks = linspace(1.0, 5.0, steps > 0 ? steps : 81);
    emit_two_moment_curve(
        out, "k", ks,
        [](double k) { return fb::two_moment_bound(fb::WeibullModel(k).moment_set(1.0)); },
        [](double k) { return fb::weibull_fisher(k, 1.0); });
    return 0;
  }
  if (figure == "fig3") {
    const bool weibull = dist != "lognormal";
    const fb::RealVector xs =
        weibull ? linspace(1.0, 10.0, steps > 0 ? steps : 91)
                : linspace(0.2, 1.2, steps > 0 ? steps : 101);
    out << (weibull ? "k" : "sigma") << ",chi_db_L1,chi_db_L2,chi_db_L3,chi_db_L4\n";
    for (double x : xs) {
      out << format_g17(x);
      for (int l = 1; l <= 4; ++l) {
        double chi_db;
        if (weibull) {
          const fb::WeibullModel m(x);
          chi_db = fb::loss_chi(fb::strong_bound(fb::closed_form_point(m, power_set(l), 1.0))
                                    .scalar(),
                                fb::weibull_fisher(x, 1.0))
                       .chi_db;
        } else {
          const fb::LogNormalModel m(x);
          chi_db = fb::loss_chi(fb::strong_bound(fb::closed_form_point(m, power_set(l), 0.0))
                                    .scalar(),
                                fb::lognormal_fisher(x))
                       .chi_db;
        }
        out << ',' << format_g17(chi_db);
      }
      out << '\n';
    }
    return 0;
  }
  if (figure == "fig4" || figure == "fig5") {
    const bool weibull = figure == "fig4";
    const fb::RealVector xs = weibull ? linspace(1.0, 10.0, steps > 0 ? steps : 91)
                                      : linspace(0.2, 1.2, steps > 0 ? steps : 101);
    out << (weibull ? "k" : "sigma") << ",w1,w2,w3,w4\n";
    for (double x : xs) {
      fb::BoundReport rep =
          weibull ? fb::strong_bound(fb::closed_form_point(fb::WeibullModel(x), power_set(4), 1.0))
                  : fb::strong_bound(
                        fb::closed_form_point(fb::LogNormalModel(x), power_set(4), 0.0));
      out << format_g17(x);
      for (double w : rep.norm_weights) out << ',' << format_g17(w);
      out << '\n';
    }
    return 0;
  }
  if (figure == "fig6" || figure == "fig7") {
    fb::LearnConfig cfg;
    cfg.theta_grid = linspace(0.0, 4.0, steps > 0 ? steps : 81);
    cfg.stats = rapp_stats();
    cfg.samples_per_point = samples;
    cfg.seed = seed;
    const fb::RappSystem system(rho);
    const fb::MomentProfile profile = fb::learn_profile(system, cfg);
    const auto reports = fb::bound_curve(
        profile, [](double theta) { return fb::reference_input_fisher(theta); });
    if (figure == "fig6") {
      out << "theta,chi_db\n";
      for (std::size_t i = 0; i < reports.size(); ++i)
        out << format_g17(profile.theta_grid[i]) << ',' << format_g17(*reports[i].chi_db) << '\n';
    } else {
      out << "theta,w1,w2,w3,w4,w5,w6\n";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        out << format_g17(profile.theta_grid[i]);
        for (double w : reports[i].norm_weights) out << ',' << format_g17(w);
        out << '\n';
      }
    }
    return 0;
  }
  throw CLI::ValidationError("unknown figure id '" + figure + "' (expected fig1..fig7)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pessimistic Fisher-information bounds, calibrated moment profiles and "
               "conservative maximum-likelihood estimation"};
  app.require_subcommand(1);

  ModelOpts model_opts;
  std::string stats_csv = "pow1,pow2";
  std::string out_path, profile_path, system_name, weights_kind = "optimal", figure, fig_dist =
      "weibull";
  double theta = 1.0, theta_min = 0.0, theta_max = 4.0, rho = 2.0, diff_step = 1e-2;
  double reference_fisher = 1.0, sigma_max = 2.0;
  int theta_steps = 81, steps = 0;
  std::uint64_t samples = 1'000'000, seed = 0, n_per_trial = 10'000, trials = 500;
  bool crn = true;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--dist", model_opts.dist, "gaussian|lognormal|weibull");
    cmd->add_option("--sigma", model_opts.sigma, "scale parameter (gaussian/lognormal)");
    cmd->add_option("--k", model_opts.k, "Weibull shape");
  };
  auto add_grid_flags = [&](CLI::App* cmd) {
    cmd->add_option("--theta-min", theta_min);
    cmd->add_option("--theta-max", theta_max);
    cmd->add_option("--theta-steps", theta_steps);
  };

  CLI::App* info = app.add_subcommand("info", "exact Fisher information of a reference model");
  add_model_flags(info);
  info->add_option("--theta", theta);
  info->add_option("--out", out_path);

  CLI::App* bound = app.add_subcommand("bound", "information bound for a model or profile");
  add_model_flags(bound);
  bound->add_option("--stats", stats_csv, "comma list: pow1..pow8,abs,logabs,log,log2");
  CLI::Option* bound_theta = bound->add_option("--theta", theta);
  add_grid_flags(bound);
  bound->add_option("--profile", profile_path, "moment profile file");
  CLI::Option* ref_opt = bound->add_option("--reference-fisher", reference_fisher,
                                           "exact Fisher information for chi columns");
  bound->add_option("--out", out_path);

  CLI::App* learn = app.add_subcommand("learn", "Monte-Carlo moment profile of a system");
  learn->add_option("--system", system_name, "rapp|identity");
  learn->add_option("--rho", rho, "Rapp smoothness");
  add_model_flags(learn);
  learn->add_option("--stats", stats_csv);
  add_grid_flags(learn);
  learn->add_option("--samples", samples);
  learn->add_option("--seed", seed);
  learn->add_option("--diff-step", diff_step);
  learn->add_option("--crn", crn);
  learn->add_option("--out", out_path);

  CLI::App* estimate = app.add_subcommand("estimate", "compressed-sample estimation trials");
  add_model_flags(estimate);
  estimate->add_option("--system", system_name, "rapp|identity (with --profile)");
  estimate->add_option("--rho", rho);
  estimate->add_option("--profile", profile_path);
  estimate->add_option("--stats", stats_csv);
  estimate->add_option("--theta", theta, "true parameter");
  CLI::Option* est_lo = estimate->add_option("--bracket-min", theta_min);
  CLI::Option* est_hi = estimate->add_option("--bracket-max", theta_max);
  estimate->add_option("--n", n_per_trial);
  estimate->add_option("--trials", trials);
  estimate->add_option("--seed", seed);
  estimate->add_option("--weights", weights_kind, "optimal|ones");
  estimate->add_option("--out", out_path);

  CLI::App* reproduce = app.add_subcommand("reproduce", "plot-ready CSV for fig1..fig7");
  reproduce->add_option("figure", figure, "fig1..fig7")->required();
  reproduce->add_option("--dist", fig_dist, "fig3 variant: weibull|lognormal");
  reproduce->add_option("--sigma-max", sigma_max, "fig1 right edge");
  reproduce->add_option("--steps", steps, "grid resolution");
  reproduce->add_option("--rho", rho);
  reproduce->add_option("--samples", samples);
  reproduce->add_option("--seed", seed);
  reproduce->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*info) return run_info(model_opts, theta, out_path);
    if (*bound) {
      const fb::RealVector grid = bound_theta->count() ? fb::RealVector{theta}
                                                       : linspace(theta_min, theta_max, theta_steps);
      return run_bound(model_opts, !model_opts.dist.empty(), stats_csv, grid, profile_path,
                       reference_fisher, ref_opt->count() > 0, out_path);
    }
    if (*learn)
      return run_learn(system_name, rho, model_opts, !model_opts.dist.empty(), stats_csv,
                       linspace(theta_min, theta_max, theta_steps), samples, seed, diff_step, crn,
                       out_path);
    if (*estimate) {
      fb::Bracket bracket{0.0, 0.0};
      if (est_lo->count() && est_hi->count()) bracket = {theta_min, theta_max};
      return run_estimate(model_opts, !model_opts.dist.empty(), system_name, rho, profile_path,
                          stats_csv, theta, n_per_trial, trials, seed, weights_kind, bracket,
                          out_path);
    }
    if (*reproduce)
      return run_reproduce(figure, fig_dist, sigma_max, steps, rho, samples, seed, out_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const fb::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
