#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hjreach {

/// Seeded generator with platform-independent uniform draws. All run
/// randomness derives from one seed through named sub-streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Deterministic child stream, e.g. Rng::stream(seed, "sampling").
  static Rng stream(std::uint64_t seed, std::string_view name);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace hjreach
