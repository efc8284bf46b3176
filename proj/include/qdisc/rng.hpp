#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qdisc {

/// Counter-based 64-bit generator: output n of stream `key` is
/// splitmix64_mix(key + n * 0x9E3779B97F4A7C15), n = 1, 2, ...
///
/// Stream layout used by the oracle and the simulator: stream s of a run
/// seeded with `seed` has key = splitmix64_mix(seed ^ (s * 0xD1B54A32D192ED03)).
/// Streams never share state, so restarts give identical results whether run
/// serially or on several threads.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kStreamStride = 0xD1B54A32D192ED03ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static CounterRng stream(std::uint64_t seed, std::uint64_t stream_index) {
    return CounterRng(mix(seed ^ (stream_index * kStreamStride)));
  }

  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open_low() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one output per call).
  double normal() {
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t n) { return next() % n; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qdisc
