#pragma once

#include <cstdint>

namespace kronwig {

// Splittable pseudo-random generator built on the SplitMix64 finalizer.
// stream(seed, id) yields independent streams: replicates keep identical
// output for a fixed (seed, id) no matter how work is distributed over
// threads.  Not cryptographic; statistically adequate for Monte Carlo.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, stream_id).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53-bit resolution.
  double uniform01();

  // Uniform on (lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (one spare cached).
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kronwig
