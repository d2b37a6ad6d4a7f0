#pragma once

#include <cstddef>

namespace polyads::kernels {

// Softmax statistics over weights exp(v_k), k = 0..n-1, computed against the
// running maximum: log_norm = log(sum exp(v_k)), mean and var of the index k
// under p_k proportional to exp(v_k).
struct OrbitMoments {
  double log_norm;
  double mean;
  double var;
};

struct KernelTable {
  double (*max)(const double*, size_t);
  double (*sum)(const double*, size_t);
  double (*dot)(const double*, const double*, size_t);
  void (*exp_inplace)(double*, size_t);
  OrbitMoments (*index_moments)(const double*, size_t);
  const char* name;
};

enum class Isa { scalar, avx2 };

const KernelTable& scalar_table();
#if defined(POLYADS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

// Active table. Picked once: POLYADS_KERNELS env override, else the widest
// instruction set the CPU reports.
const KernelTable& table();
Isa active_isa();
const char* isa_name();
bool isa_available(Isa isa);
void set_isa(Isa isa);

inline double max(const double* x, size_t n) { return table().max(x, n); }
inline double sum(const double* x, size_t n) { return table().sum(x, n); }
inline double dot(const double* x, const double* y, size_t n) {
  return table().dot(x, y, n);
}
inline void exp_inplace(double* x, size_t n) { table().exp_inplace(x, n); }
inline OrbitMoments index_moments(const double* v, size_t n) {
  return table().index_moments(v, n);
}

}  // namespace polyads::kernels
