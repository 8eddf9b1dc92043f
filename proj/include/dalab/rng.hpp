#pragma once

#include <cstdint>

#include "dalab/torus.hpp"

namespace dalab {

/// SplitMix64 (Steele, Lea, Flood 2014). Every stochastic routine takes an explicit
/// seed; sample i of a run draws from SplitMix64(stream_seed(seed, i)), so results
/// do not depend on how samples are distributed over threads.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  TorusPoint point() {
    const double a = uniform(), b = uniform(), c = uniform();
    return TorusPoint(a, b, c);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return mix.next();
}

}  // namespace dalab
