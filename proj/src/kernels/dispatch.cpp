#include <atomic>
#include <cstdlib>
#include <cstring>

#include "polyads/kernels.hpp"
#include "polyads/types.hpp"

namespace polyads::kernels {

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* pick() {
  if (const char* env = std::getenv("POLYADS_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_table();
#if defined(POLYADS_HAVE_AVX2)
    if (std::strcmp(env, "avx2") == 0 && isa_available(Isa::avx2))
      return &avx2_table();
#endif
    throw InvalidParameterError(std::string("POLYADS_KERNELS=") + env +
                                " is not available on this machine");
  }
#if defined(POLYADS_HAVE_AVX2)
  if (isa_available(Isa::avx2)) return &avx2_table();
#endif
  return &scalar_table();
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(POLYADS_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = pick();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Isa active_isa() {
  return &table() == &scalar_table() ? Isa::scalar : Isa::avx2;
}

const char* isa_name() { return table().name; }

void set_isa(Isa isa) {
  if (!isa_available(isa))
    throw InvalidParameterError("requested kernel set is not available");
  switch (isa) {
    case Isa::scalar:
      g_active.store(&scalar_table(), std::memory_order_release);
      break;
    case Isa::avx2:
#if defined(POLYADS_HAVE_AVX2)
      g_active.store(&avx2_table(), std::memory_order_release);
#endif
      break;
  }
}

}  // namespace polyads::kernels
