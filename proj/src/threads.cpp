#include "icps/threads.hpp"

#include <atomic>

namespace icps {

namespace {
std::atomic<int> g_max_threads{1};
}

int max_threads() { return g_max_threads.load(std::memory_order_relaxed); }

void set_max_threads(int n) {
  g_max_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

}  // namespace icps
