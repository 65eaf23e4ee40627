#include "optlab/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace optlab {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return splitmix64_mix(seed + kGolden + splitmix64_mix(value + kGolden));
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {
  std::uint64_t x = hash_combine(seed, stream);
  for (auto& word : s_) {
    x += kGolden;
    word = splitmix64_mix(x);
  }
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Rng Rng::split(std::uint64_t sub_stream) const noexcept {
  return Rng(seed_, hash_combine(stream_, sub_stream));
}

std::vector<double> rng_normal(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

}  // namespace optlab
