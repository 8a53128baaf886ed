#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hcf {

// Worker budget: HCF_THREADS env var, else hardware concurrency.
int thread_count();
void set_thread_count(int n);

namespace detail {
void run_on_pool(std::size_t n_tasks, const std::function<void(std::size_t)>& task);
}

// Runs task(i) for i in [0, n). Tasks are claimed from an atomic counter, so
// the assignment of tasks to threads is arbitrary; callers must make each
// task independent (e.g. write to disjoint slots).
template <class F>
void parallel_for(std::size_t n, F&& task) {
  detail::run_on_pool(n, std::function<void(std::size_t)>(std::forward<F>(task)));
}

// Deterministic map-reduce: the index range is split into fixed-size chunks
// (chunking depends only on n), chunk results are reduced in chunk order.
// Output is therefore bit-identical for any thread count.
template <class T, class ChunkFn, class ReduceFn>
T parallel_reduce(std::size_t n, std::size_t chunk_size, T init, ChunkFn&& chunk_fn,
                  ReduceFn&& reduce_fn) {
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = n == 0 ? 0 : (n - 1) / chunk_size + 1;
  std::vector<T> partial(n_chunks, init);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t lo = c * chunk_size;
    const std::size_t hi = lo + chunk_size < n ? lo + chunk_size : n;
    partial[c] = chunk_fn(lo, hi);
  });
  T acc = init;
  for (std::size_t c = 0; c < n_chunks; ++c) acc = reduce_fn(acc, partial[c]);
  return acc;
}

}  // namespace hcf
