#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ttmap {

/// Counter-based splittable generator (splitmix64). A stream keyed by
/// (seed, a, b) is independent of thread scheduling, so parallel consumers
/// reproduce bit-identical values.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static SplitMix64 keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    SplitMix64 g(seed);
    std::uint64_t s = g.next() ^ mix(a);
    SplitMix64 h(s);
    return SplitMix64(h.next() ^ mix(b ^ 0x9e3779b97f4a7c15ull));
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    return mix(z);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (platform-independent, unlike
  /// std::normal_distribution).
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace ttmap
