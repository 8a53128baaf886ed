#include "parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>

namespace hcf {

namespace {

int g_threads = 0;  // 0 = not configured yet

int default_threads() {
  if (const char* env = std::getenv("HCF_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

int thread_count() {
  if (g_threads <= 0) g_threads = default_threads();
  return g_threads;
}

void set_thread_count(int n) { g_threads = n > 0 ? n : 0; }

namespace detail {

void run_on_pool(std::size_t n_tasks, const std::function<void(std::size_t)>& task) {
  if (n_tasks == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n_tasks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= n_tasks || failed.load(std::memory_order_relaxed)) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

}  // namespace hcf
