#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fisherbound/errors.hpp"
#include "fisherbound/numkit.hpp"

namespace fisherbound {

enum class StatKind { power, abs_value, log_abs, log, log_squared };

/// Descriptor of one auxiliary statistic phi(z).
/// Labels: pow1..pow8, abs, logabs, log, log2.
struct StatisticSpec {
  StatKind kind = StatKind::power;
  int exponent = 1;  // power kind only, 1..8

  static StatisticSpec power(int l);
  static StatisticSpec absolute() { return {StatKind::abs_value, 0}; }
  static StatisticSpec log_abs() { return {StatKind::log_abs, 0}; }
  static StatisticSpec log() { return {StatKind::log, 0}; }
  static StatisticSpec log_squared() { return {StatKind::log_squared, 0}; }

  static StatisticSpec parse(const std::string& label);
  std::string label() const;

  /// Evaluates phi(z). Exact zeros under a log are clamped to
  /// ln(DBL_MIN); clamp_count, when given, counts those events.
  double operator()(double z, std::uint64_t* clamp_count = nullptr) const;

  bool operator==(const StatisticSpec&) const = default;
};

std::vector<StatisticSpec> parse_stat_list(const std::string& comma_separated);
std::string stat_list_label(const std::vector<StatisticSpec>& stats);

RealVector evaluate_stats(const std::vector<StatisticSpec>& stats, double z,
                          std::uint64_t* clamp_count = nullptr);

}  // namespace fisherbound
