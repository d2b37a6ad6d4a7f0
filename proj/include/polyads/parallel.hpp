#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace polyads {

// POLYADS_WORKERS env overrides the hardware count.
inline int default_workers() {
  if (const char* env = std::getenv("POLYADS_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Runs body(begin, end, block_index) over consecutive blocks of fixed size.
// Block boundaries depend only on n and block_size, never on the worker
// count, so per-block partials folded in index order reduce identically for
// any number of workers.
template <class Body>
void parallel_blocks(size_t n, size_t block_size, int workers, Body&& body) {
  if (n == 0) return;
  if (block_size == 0) block_size = 1;
  size_t nblocks = (n + block_size - 1) / block_size;
  auto run = [&](size_t b) {
    size_t begin = b * block_size;
    size_t end = begin + block_size < n ? begin + block_size : n;
    body(begin, end, b);
  };
  if (workers <= 1 || nblocks <= 1) {
    for (size_t b = 0; b < nblocks; ++b) run(b);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= nblocks) return;
      try {
        run(b);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  size_t nthreads = std::min<size_t>(static_cast<size_t>(workers), nblocks);
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (size_t t = 0; t < nthreads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace polyads
