#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fisherbound/bounds.hpp"
#include "fisherbound/expfam.hpp"
#include "fisherbound/rng.hpp"
#include "fisherbound/statistics.hpp"

namespace fisherbound {

/// Rapp amplifier nonlinearity y = x / (1 + |x|^(2 rho))^(1/(2 rho)).
/// Total on finite inputs; |y| < 1, odd, monotone nondecreasing.
double rapp_forward(double x, double rho);

/// Fisher information of the Gaussian input x = theta + eta wrt theta.
double reference_input_fisher(double theta, double input_variance = 1.0);

/// A memoryless stochastic system y = map(theta, noise) with a
/// theta-independent noise law, so common random numbers work across
/// theta perturbations. Deterministic given the RNG stream.
class BlackBoxSystem {
public:
  virtual ~BlackBoxSystem() = default;
  virtual std::string name() const = 0;
  virtual double draw_noise(Rng& rng) const = 0;
  virtual double map(double theta, double noise) const = 0;
  double observe(double theta, Rng& rng) const { return map(theta, draw_noise(rng)); }
};

/// Rapp model driven by x = theta + eta, eta ~ N(0,1).
class RappSystem final : public BlackBoxSystem {
public:
  explicit RappSystem(double rho);
  double rho() const { return rho_; }
  std::string name() const override { return "rapp"; }
  double draw_noise(Rng& rng) const override { return rng.normal(); }
  double map(double theta, double noise) const override {
    return rapp_forward(theta + noise, rho_);
  }

private:
  double rho_;
};

/// y = theta + eta, eta ~ N(0,1).
class IdentitySystem final : public BlackBoxSystem {
public:
  std::string name() const override { return "identity"; }
  double draw_noise(Rng& rng) const override { return rng.normal(); }
  double map(double theta, double noise) const override { return theta + noise; }
};

/// Adapts a reference model's pivotal sampler to the system interface.
class ModelSystem final : public BlackBoxSystem {
public:
  explicit ModelSystem(const ExpFamilyModel& model) : model_(&model) {}
  std::string name() const override { return model_->name(); }
  double draw_noise(Rng& rng) const override { return model_->draw_noise(rng); }
  double map(double theta, double noise) const override {
    return model_->from_noise(theta, noise);
  }

private:
  const ExpFamilyModel* model_;
};

struct LearnConfig {
  RealVector theta_grid;
  std::vector<StatisticSpec> stats;
  std::uint64_t samples_per_point = 1'000'000;
  std::uint64_t seed = 0;
  double diff_step = 1e-2;  // central-difference step for d mu / d theta
  bool crn = true;          // common random numbers for the derivative pair
  void validate() const;
};

struct LearnDiagnostics {
  std::uint64_t log_clamp_events = 0;  // exact zeros clamped under a log
};

/// Estimates mu_phi, d mu_phi / d theta and R_phi on the theta grid by
/// seeded Monte Carlo. Grid points use independent substreams
/// stream(seed, 3i), stream(seed, 3i+1), stream(seed, 3i+2), so the
/// result is bit-identical for any worker count.
MomentProfile learn_profile(const BlackBoxSystem& system, const LearnConfig& cfg,
                            LearnDiagnostics* diag = nullptr);

// Profile file format (text, line oriented):
//   fisherbound-profile v1
//   stats: <comma-separated labels>
//   provenance: closed_form | monte_carlo samples=<n> seed=<s> diff_step=<h> crn=<0|1>
//   theta=<v>; mu=<L csv>; dmu=<L csv>; cov_upper=<L(L+1)/2 csv>; jitter=<v>
// Numbers carry 17 significant digits; NaN/Inf are rejected on load.
void save_profile(const MomentProfile& profile, std::ostream& out);
void save_profile(const MomentProfile& profile, const std::string& path);
MomentProfile load_profile(std::istream& in);
MomentProfile load_profile(const std::string& path);

}  // namespace fisherbound
