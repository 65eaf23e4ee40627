#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace optlab {

/// SplitMix64 finalizer; also used to derive seeds and hash keys.
std::uint64_t splitmix64_mix(std::uint64_t x) noexcept;

/// Combine two 64-bit words into one well-mixed word (order-sensitive).
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;

/// xoshiro256++ seeded through SplitMix64. A generator is identified by
/// (seed, stream); distinct streams of one seed are independent sequences.
///
/// Normals use the Box-Muller transform on 53-bit uniforms, caching the second
/// variate of each pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  double normal() noexcept;

  /// Spawn an independent generator for a sub-purpose of this one's seed.
  Rng split(std::uint64_t sub_stream) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// n standard-normal draws.
std::vector<double> rng_normal(Rng& rng, std::size_t n);

}  // namespace optlab
