#pragma once

#include <cmath>
#include <cstdint>

namespace cspx {

// Pinned, platform-independent PRNG stack: splitmix64 for stream derivation,
// xoshiro256++ for the bulk stream, Box-Muller for normals. Every sampling
// routine owns a stream derived from (seed, purpose, index), so results are
// bit-reproducible and independent of evaluation order.

struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
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

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_open01() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % bound;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int s) { return (x << s) | (x >> (64 - s)); }

  std::uint64_t s_[4];
  double cached_{0};
  bool has_cached_{false};
};

// Stream purposes; each (seed, purpose, index) triple yields an independent
// generator.
namespace stream {
inline constexpr std::uint64_t kProjectionInput = 0xA11CE5EED0001ULL;
inline constexpr std::uint64_t kDesignRow = 0xA11CE5EED0002ULL;
inline constexpr std::uint64_t kTrueWeights = 0xA11CE5EED0003ULL;
inline constexpr std::uint64_t kNoise = 0xA11CE5EED0004ULL;
}  // namespace stream

inline Xoshiro256pp make_stream(std::uint64_t seed, std::uint64_t purpose,
                                std::uint64_t index = 0) {
  SplitMix64 sm{seed};
  const std::uint64_t a = sm.next() ^ purpose;
  SplitMix64 sm2{a};
  const std::uint64_t b = sm2.next() ^ index;
  SplitMix64 sm3{b};
  return Xoshiro256pp(sm3.next());
}

}  // namespace cspx
