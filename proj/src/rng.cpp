#include "polyads/rng.hpp"

#include <cmath>

namespace polyads {

namespace {

constexpr uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(uint64_t a, uint64_t b, uint64_t& hi, uint64_t& lo) {
  __uint128_t p = static_cast<__uint128_t>(a) * b;
  hi = static_cast<uint64_t>(p >> 64);
  lo = static_cast<uint64_t>(p);
}

}  // namespace

std::array<uint64_t, 4> PhiloxRng::block(std::array<uint64_t, 4> c,
                                         std::array<uint64_t, 2> k) {
  for (int round = 0;; ++round) {
    uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    if (round == 9) break;
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

uint64_t PhiloxRng::next_u64() {
  if (pos_ == 4) {
    buffer_ = block(counter_, key_);
    pos_ = 0;
    // Ripple carry; the low word alone never wraps in practice.
    if (++counter_[0] == 0 && ++counter_[1] == 0 && ++counter_[2] == 0)
      ++counter_[3];
  }
  return buffer_[static_cast<size_t>(pos_++)];
}

double PhiloxRng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform_pos();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double t = 6.283185307179586476925287 * u2;
  cached_normal_ = r * std::sin(t);
  have_cached_normal_ = true;
  return r * std::cos(t);
}

int64_t PhiloxRng::poisson_small(double lambda) {
  if (lambda <= 0.0) return 0;
  double p = std::exp(-lambda);
  double f = p;
  double u = uniform01();
  int64_t k = 0;
  // Cap far beyond any realistic quantile; the cumulative sum can stall
  // once p underflows.
  int64_t cap =
      static_cast<int64_t>(lambda + 12.0 * std::sqrt(lambda) + 60.0);
  while (u > f && k < cap) {
    ++k;
    p *= lambda / static_cast<double>(k);
    f += p;
  }
  return k;
}

int64_t PhiloxRng::poisson(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidParameterError("poisson mean must be finite and nonnegative");
  int64_t total = 0;
  while (lambda > 30.0) {
    total += poisson_small(30.0);
    lambda -= 30.0;
  }
  return total + poisson_small(lambda);
}

double PhiloxRng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw InvalidParameterError("gamma shape and rate must be positive");
  if (shape < 1.0) {
    double u = uniform_pos();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform_pos();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
      return d * v / rate;
  }
}

}  // namespace polyads
