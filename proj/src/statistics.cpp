#include "fisherbound/statistics.hpp"

#include <cfloat>
#include <cmath>

namespace fisherbound {

namespace {

double ipow(double z, int l) {
  double r = 1.0;
  for (int i = 0; i < l; ++i) r *= z;
  return r;
}

double log_clamped(double az, std::uint64_t* clamp_count) {
  if (az < DBL_MIN) {
    if (clamp_count) ++*clamp_count;
    return std::log(DBL_MIN);
  }
  return std::log(az);
}

}  // namespace

StatisticSpec StatisticSpec::power(int l) {
  if (l < 1 || l > 8) throw Error("StatisticSpec::power: exponent must be in 1..8");
  return {StatKind::power, l};
}

StatisticSpec StatisticSpec::parse(const std::string& label) {
  if (label.rfind("pow", 0) == 0 && label.size() == 4 && label[3] >= '1' && label[3] <= '8')
    return power(label[3] - '0');
  if (label == "abs") return absolute();
  if (label == "logabs") return log_abs();
  if (label == "log") return log();
  if (label == "log2") return log_squared();
  throw FormatError("unknown statistic label '" + label + "'");
}

std::string StatisticSpec::label() const {
  switch (kind) {
    case StatKind::power: return "pow" + std::to_string(exponent);
    case StatKind::abs_value: return "abs";
    case StatKind::log_abs: return "logabs";
    case StatKind::log: return "log";
    case StatKind::log_squared: return "log2";
  }
  return "?";
}

double StatisticSpec::operator()(double z, std::uint64_t* clamp_count) const {
  switch (kind) {
    case StatKind::power: return ipow(z, exponent);
    case StatKind::abs_value: return std::abs(z);
    case StatKind::log_abs: return log_clamped(std::abs(z), clamp_count);
    case StatKind::log:
      if (z < 0.0) throw OutOfSupport("log statistic evaluated at negative z");
      return log_clamped(z, clamp_count);
    case StatKind::log_squared: {
      if (z < 0.0) throw OutOfSupport("log2 statistic evaluated at negative z");
      const double l = log_clamped(z, clamp_count);
      return l * l;
    }
  }
  throw Error("StatisticSpec: unreachable");
}

std::vector<StatisticSpec> parse_stat_list(const std::string& comma_separated) {
  std::vector<StatisticSpec> out;
  std::size_t pos = 0;
  while (pos <= comma_separated.size()) {
    std::size_t next = comma_separated.find(',', pos);
    if (next == std::string::npos) next = comma_separated.size();
    out.push_back(StatisticSpec::parse(comma_separated.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::string stat_list_label(const std::vector<StatisticSpec>& stats) {
  std::string s;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (i) s += ',';
    s += stats[i].label();
  }
  return s;
}

RealVector evaluate_stats(const std::vector<StatisticSpec>& stats, double z,
                          std::uint64_t* clamp_count) {
  RealVector phi(stats.size());
  for (std::size_t l = 0; l < stats.size(); ++l) phi[l] = stats[l](z, clamp_count);
  return phi;
}

}  // namespace fisherbound
