#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "ciasim/types.hpp"

namespace ciasim::rng {

// Identifier recorded in every artifact that depends on random draws.
// splitmix64 supplies the uniform stream, Box-Muller turns pairs of
// uniforms into Gaussians. The construction is specified exactly by the
// code below, so seeds are portable across implementations of it.
inline constexpr const char* kAlgorithmId = "splitmix64-boxmuller-v1";

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

struct SplitMix64 {
  uint64_t state = 0;

  constexpr uint64_t next() {
    uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

// Child stream derivation. derive(seed, tag) gives independent streams for
// distinct tags; chain it for multi-index streams (P point, trial, role).
inline constexpr uint64_t derive(uint64_t seed, uint64_t tag) {
  SplitMix64 g{seed ^ (kGolden * (tag + 1))};
  return g.next();
}

inline constexpr uint64_t derive3(uint64_t seed, uint64_t a, uint64_t b) {
  return derive(derive(seed, a), b);
}

// Role tags for derived streams (arbitrary fixed constants).
inline constexpr uint64_t kTagChannel = 0x6368616eULL;  // "chan"
inline constexpr uint64_t kTagData = 0x64617461ULL;     // "data"
inline constexpr uint64_t kTagNoise = 0x6e6f6973ULL;    // "nois"

class Stream {
 public:
  explicit constexpr Stream(uint64_t seed) : gen_{seed} {}

  uint64_t raw() { return gen_.next(); }

  // Uniform in [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform01_positive() {
    return (static_cast<double>(gen_.next() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Unbiased integer in [0, bound).
  uint64_t below(uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v = gen_.next();
    while (v >= limit) v = gen_.next();
    return v % bound;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_positive();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Circularly symmetric complex normal, unit variance overall.
  cdouble cnormal() {
    const double re = normal();
    const double im = normal();
    return cdouble(re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0);
  }

 private:
  SplitMix64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ciasim::rng
