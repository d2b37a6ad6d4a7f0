#include "polyads/kernels.hpp"

#if defined(POLYADS_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstring>
#include <limits>

namespace polyads::kernels {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double reduce_add(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double reduce_max(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

// exp via base-2 range reduction and the classic rational approximation,
// accurate to about 1 ulp on the reduced interval. The 2^n rescale is split
// into two factors so exponents near the denormal boundary stay exact.
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);

  __m256d overflow = _mm256_cmp_pd(x, _mm256_set1_pd(709.782712893384), _CMP_GT_OQ);
  __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-745.2), _CMP_LT_OQ);
  __m256d self = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);
  __m256d z = _mm256_mul_pd(r, r);

  __m256d p = _mm256_fmadd_pd(p0, z, p1);
  p = _mm256_fmadd_pd(p, z, p2);
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(q0, z, q1);
  q = _mm256_fmadd_pd(q, z, q2);
  q = _mm256_fmadd_pd(q, z, q3);
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(two, e, one);

  __m128i ni = _mm256_cvtpd_epi32(n);
  __m128i n_half = _mm_srai_epi32(ni, 1);
  __m128i n_rest = _mm_sub_epi32(ni, n_half);
  auto pow2 = [](__m128i k) {
    __m256i wide = _mm256_cvtepi32_epi64(k);
    wide = _mm256_add_epi64(wide, _mm256_set1_epi64x(1023));
    wide = _mm256_slli_epi64(wide, 52);
    return _mm256_castsi256_pd(wide);
  };
  e = _mm256_mul_pd(e, pow2(n_half));
  e = _mm256_mul_pd(e, pow2(n_rest));

  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                       overflow);
  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
  e = _mm256_blendv_pd(e, x, self);
  return e;
}

// Tails are padded into a spare vector with a neutral element, so every
// input runs through the identical vector arithmetic.
inline __m256d load_padded(const double* x, size_t n, size_t i, double pad) {
  if (i + 4 <= n) return _mm256_loadu_pd(x + i);
  double tmp[4] = {pad, pad, pad, pad};
  for (size_t k = 0; i + k < n; ++k) tmp[k] = x[i + k];
  return _mm256_loadu_pd(tmp);
}

double max_avx2(const double* x, size_t n) {
  if (n == 0) return kNegInf;
  __m256d acc = _mm256_set1_pd(kNegInf);
  for (size_t i = 0; i < n; i += 4)
    acc = _mm256_max_pd(acc, load_padded(x, n, i, kNegInf));
  return reduce_max(acc);
}

double sum_avx2(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  for (size_t i = 0; i < n; i += 4)
    acc = _mm256_add_pd(acc, load_padded(x, n, i, 0.0));
  return reduce_add(acc);
}

double dot_avx2(const double* x, const double* y, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  for (size_t i = 0; i < n; i += 4)
    acc = _mm256_fmadd_pd(load_padded(x, n, i, 0.0), load_padded(y, n, i, 0.0),
                          acc);
  return reduce_add(acc);
}

void exp_inplace_avx2(double* x, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, exp4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    double tmp[4] = {0.0, 0.0, 0.0, 0.0};
    std::memcpy(tmp, x + i, (n - i) * sizeof(double));
    _mm256_storeu_pd(tmp, exp4(_mm256_loadu_pd(tmp)));
    std::memcpy(x + i, tmp, (n - i) * sizeof(double));
  }
}

OrbitMoments index_moments_avx2(const double* v, size_t n) {
  double m = max_avx2(v, n);
  __m256d mm = _mm256_set1_pd(m);
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d k = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d four = _mm256_set1_pd(4.0);
  for (size_t i = 0; i < n; i += 4) {
    // Padding with -inf makes the extra lanes weightless.
    __m256d w = exp4(_mm256_sub_pd(load_padded(v, n, i, kNegInf), mm));
    s0 = _mm256_add_pd(s0, w);
    __m256d kw = _mm256_mul_pd(k, w);
    s1 = _mm256_add_pd(s1, kw);
    s2 = _mm256_fmadd_pd(k, kw, s2);
    k = _mm256_add_pd(k, four);
  }
  double z = reduce_add(s0);
  double mean = reduce_add(s1) / z;
  double var = reduce_add(s2) / z - mean * mean;
  if (var < 0.0) var = 0.0;
  return {m + std::log(z), mean, var};
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t = {max_avx2,         sum_avx2,
                                dot_avx2,         exp_inplace_avx2,
                                index_moments_avx2, "avx2"};
  return t;
}

}  // namespace polyads::kernels

#endif  // POLYADS_HAVE_AVX2
