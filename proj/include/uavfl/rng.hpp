#pragma once

// Seeded random streams for reproducible runs.
//
// A single master seed fans out into independent named streams (client
// selection, per-client shuffles, model init, UE geometry, ...). Each stream
// seed is a pure function of (master, tag, counters), so the order in which
// streams are created or consumed (e.g. by worker threads) never changes the
// numbers any one stream produces.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace uavfl::rng {

enum class StreamTag : std::uint64_t {
  selection = 1,
  client = 2,
  init = 3,
  geometry = 4,
  partition = 5,
  data = 6,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                    std::uint64_t a = 0,
                                    std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(master ^ mix64(static_cast<std::uint64_t>(tag)));
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x632BE59BD9B4E019ULL));
  return h;
}

/// Thin wrapper over mt19937_64 with distribution code written out by hand,
/// so sequences do not depend on the standard library's distribution
/// implementations.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  Stream(std::uint64_t master, StreamTag tag, std::uint64_t a = 0,
         std::uint64_t b = 0)
      : engine_(derive_seed(master, tag, a, b)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return lo + (hi - lo) * uniform01();
  }

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Fisher-Yates.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace uavfl::rng
