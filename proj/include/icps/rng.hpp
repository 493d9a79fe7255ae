#pragma once

#include <cmath>
#include <cstdint>

namespace icps {

/// SplitMix64 (Steele, Lea & Flood 2014). 64-bit state, full period,
/// identical output on every platform. All randomness in this project
/// flows through this generator so runs are reproducible bit-for-bit.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  /// Standard normal via Box-Muller; draws pairs, caches the second.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// One-shot SplitMix64 finalizer, used as the documented mixing function
/// for deriving independent seed streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derived seed: mix(seed, a) = finalize(seed + GOLDEN * (a + 1)).
/// Adding 1 keeps index 0 from collapsing onto the root stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
  return mix64(seed + 0x9E3779B97F4A7C15ull * (a + 1));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
  return derive_seed(derive_seed(seed, a, b), c);
}

}  // namespace icps
