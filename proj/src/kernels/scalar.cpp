#include <cmath>
#include <limits>

#include "polyads/kernels.hpp"

namespace polyads::kernels {

namespace {

double max_scalar(const double* x, size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double sum_scalar(const double* x, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void exp_inplace_scalar(double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}

OrbitMoments index_moments_scalar(const double* v, size_t n) {
  double m = max_scalar(v, n);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double w = std::exp(v[i] - m);
    double k = static_cast<double>(i);
    s0 += w;
    s1 += k * w;
    s2 += k * k * w;
  }
  double mean = s1 / s0;
  double var = s2 / s0 - mean * mean;
  if (var < 0.0) var = 0.0;
  return {m + std::log(s0), mean, var};
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {max_scalar,         sum_scalar,
                                dot_scalar,         exp_inplace_scalar,
                                index_moments_scalar, "scalar"};
  return t;
}

}  // namespace polyads::kernels
