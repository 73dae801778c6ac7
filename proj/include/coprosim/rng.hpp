#pragma once

#include <cmath>
#include <cstdint>

namespace coprosim {

/// One step of splitmix64. Used to expand a 64-bit seed into generator state
/// and to derive substream seeds; advances `x` in place.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic xoshiro256++ generator.
///
/// Every stochastic component in the toolkit draws from an explicitly seeded
/// Rng (usually forked from a config seed), never from std:: distributions,
/// so that a run is reproducible bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  std::uint64_t next_u64() {
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

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Both uniforms are consumed every call,
  /// so the stream position never depends on caller history.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;  // log(0) guard; probability ~2^-53
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Unbiased integer in [0, n), n > 0. Rejection sampling on the top bits.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Derives an independent generator for substream `stream` without
  /// advancing this one. Same (state, stream) always yields the same fork.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t x = s_[0] ^ (s_[2] + 0x9e3779b97f4a7c15ULL);
    std::uint64_t mix = x;
    std::uint64_t seed = splitmix64(mix) ^ (stream * 0xbf58476d1ce4e5b9ULL + 1);
    return Rng(seed);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace coprosim
