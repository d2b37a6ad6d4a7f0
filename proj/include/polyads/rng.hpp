#pragma once

#include <array>
#include <cstdint>

#include "polyads/types.hpp"

namespace polyads {

// Philox 4x64 with 10 rounds. Counter-based: the key holds the seed, the
// high counter words select a stream, and draws advance the low word. Output
// blocks match the reference algorithm word for word, so sequences are
// reproducible across platforms and independent of call sites.
class PhiloxRng {
 public:
  explicit PhiloxRng(uint64_t seed, uint64_t s1 = 0, uint64_t s2 = 0,
                     uint64_t s3 = 0)
      : key_{seed, 0}, counter_{0, s1, s2, s3} {}

  static std::array<uint64_t, 4> block(std::array<uint64_t, 4> counter,
                                       std::array<uint64_t, 2> key);

  uint64_t next_u64();

  // [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]; safe under log.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double normal();

  // Exact inversion; means above 30 are split into independent summands.
  int64_t poisson(double lambda);

  // Marsaglia-Tsang, with the power boost below shape 1.
  double gamma(double shape, double rate);

 private:
  int64_t poisson_small(double lambda);

  std::array<uint64_t, 2> key_;
  std::array<uint64_t, 4> counter_;
  std::array<uint64_t, 4> buffer_{};
  int pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

}  // namespace polyads
