#pragma once

#include <cstdio>
#include <string>

namespace fisherbound::detail {

/// 17 significant digits; round-trips doubles exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace fisherbound::detail
