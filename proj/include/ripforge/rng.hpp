#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace ripforge {

using Seed = std::uint64_t;

/// Counter-based generator: output k of stream `key` is mix(key + k * golden).
/// Streams are cheap to derive, so every trial, point and role gets its own
/// and results do not depend on thread scheduling. Gaussians come from an
/// explicit Box-Muller so draws are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(Seed key) : key_(mix(key ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix(key_ + counter_ * kGolden);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  bool coin() { return (next_u64() >> 63) != 0; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Child seed for a numbered sub-stream.
constexpr Seed derive(Seed parent, std::uint64_t index) {
  return Rng::mix(Rng::mix(parent + 0x632be59bd9b4e019ULL) ^ (index * 0x9e3779b97f4a7c15ULL + 1));
}

/// Child seed for a named role (e.g. "ensemble", "selector").
constexpr Seed derive(Seed parent, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive(parent, h);
}

}  // namespace ripforge
