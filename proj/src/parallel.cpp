#include "lbv/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>

namespace lbv {

namespace {
unsigned g_threads = 0;
}

void set_thread_count(unsigned n) { g_threads = n; }

unsigned thread_count() {
  if (g_threads > 0) return g_threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void parallel_chunks(size_t n, size_t chunk_size,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = kDefaultChunk;
  const size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  const unsigned workers = thread_count();
  if (workers <= 1 || n_chunks <= 1) {
    for (size_t c = 0; c < n_chunks; ++c) {
      size_t b = c * chunk_size;
      size_t e = b + chunk_size < n ? b + chunk_size : n;
      fn(c, b, e);
    }
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mu;
  auto worker = [&] {
    while (true) {
      size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      size_t b = c * chunk_size;
      size_t e = b + chunk_size < n ? b + chunk_size : n;
      try {
        fn(c, b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned spawn = workers < n_chunks ? workers : static_cast<unsigned>(n_chunks);
  pool.reserve(spawn);
  for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double parallel_sum(size_t n, size_t chunk_size,
                    const std::function<double(size_t, size_t)>& chunk_fn) {
  if (n == 0) return 0.0;
  if (chunk_size == 0) chunk_size = kDefaultChunk;
  const size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<double> partial(n_chunks, 0.0);
  parallel_chunks(n, chunk_size, [&](size_t c, size_t b, size_t e) { partial[c] = chunk_fn(b, e); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace lbv
