#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace promptsim {

/// xoshiro256** (Blackman & Vigna) seeded through SplitMix64. All derived
/// quantities (uniform doubles, normals, bounded integers) are computed here
/// rather than through <random> distributions, whose output is
/// implementation-defined, so a seed yields the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  /// Deterministic independent substream for (seed, tag0, tag1, ...), e.g.
  /// (session seed, iteration, component, slice).
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept;
  static Rng derive(std::uint64_t seed, std::span<const std::uint64_t> tags) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform on the open interval (lo, hi); requires lo < hi with at least
  /// one representable double strictly between them.
  double uniform_open(double lo, double hi) noexcept;
  /// Uniform integer in [0, n), n > 0, without modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace promptsim
