#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fisherbound {

/// Seeded random stream with a pinned uniform mapping and polar-method
/// normals, so sequences are reproducible independent of the standard
/// library's distribution implementations. Substreams derived from
/// (seed, index) are independent of scheduling and worker count.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix(mix(seed))) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(mix(seed) + index));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0,1), both endpoints excluded.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

private:
  static std::uint64_t mix(std::uint64_t x) {  // splitmix64 step
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fisherbound
