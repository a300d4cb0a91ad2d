#include "mxl/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include "mxl/kernels.hpp"

namespace mxl {

std::size_t worker_count() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("MXL_THREADS")) {
    const long v = std::atol(env);
    if (v >= 1) n = static_cast<std::size_t>(v);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  kern::ops();  // settle kernel dispatch before spawning
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace mxl
