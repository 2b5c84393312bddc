#pragma once

#include <cmath>
#include <cstdint>

namespace spatialq {

/// Counter-based splittable PRNG.
///
/// Each stream is keyed by (seed, stream-id); successive draws advance a
/// counter through the splitmix64 output function. Streams derived from the
/// same seed with distinct ids are statistically independent, and a stream's
/// output depends only on (seed, id, draw index), so replications are stable
/// regardless of scheduling. Doubles are produced by explicit bit
/// manipulation (53-bit mantissa), avoiding std::uniform_real_distribution's
/// implementation-defined behavior.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream) : counter_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ stream)) {}

  uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix(counter_);
  }

  /// Uniform double in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [0, 1]; never exactly 0 (safe for log()).
  double next_open_double() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  double exponential(double rate) { return -std::log(next_open_double()) / rate; }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t counter_;
};

}  // namespace spatialq
