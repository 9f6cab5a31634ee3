#pragma once

// Deterministic data-parallel helpers. The chunk grid depends only on the
// problem size, never on the worker count, and reductions combine chunk
// results in chunk order — so any thread count produces identical output.

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace lbv {

// Global worker count, settable from the CLI. 0 means hardware default.
void set_thread_count(unsigned n);
unsigned thread_count();

// Invokes fn(chunk_index, begin, end) over [0, n) split into fixed-size
// chunks. fn must not touch shared mutable state except per-chunk slots.
void parallel_chunks(size_t n, size_t chunk_size,
                     const std::function<void(size_t, size_t, size_t)>& fn);

// Chunked sum of fn(i) with chunk partials reduced in index order.
double parallel_sum(size_t n, size_t chunk_size,
                    const std::function<double(size_t, size_t)>& chunk_fn);

constexpr size_t kDefaultChunk = 16384;

}  // namespace lbv
