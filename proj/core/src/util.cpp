#include "clipflow/util.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace clipflow {

std::size_t intra_step_threads() {
  static const std::size_t cached = [] {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    n = std::min<std::size_t>(n, 8);
    if (const char* env = std::getenv("CLIPFLOW_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
    }
    return n;
  }();
  return cached;
}

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn) {
  const std::size_t count = end > begin ? end - begin : 0;
  const std::size_t workers = std::min(intra_step_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace clipflow
