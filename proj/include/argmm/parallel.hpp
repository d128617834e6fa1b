#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace argmm {

// Resolves a thread-count request: 0 means "use the hardware".
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

// Fixed chunking that depends only on the problem size, never on the thread
// count.  Reductions combine per-chunk partials in chunk order, so numeric
// results are bit-identical for any number of threads (including one).
constexpr std::size_t kChunkSize = 256;

inline std::size_t chunk_count(std::size_t n) { return n == 0 ? 0 : (n - 1) / kChunkSize + 1; }

}  // namespace detail

// Runs fn(i) for i in [0, n).  fn must only write to locations owned by i.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    threads = resolve_threads(threads);
    const std::size_t chunks = detail::chunk_count(n);
    if (threads <= 1 || chunks <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            const std::size_t lo = c * detail::kChunkSize;
            const std::size_t hi = std::min(lo + detail::kChunkSize, n);
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), chunks);
    pool.reserve(nw);
    for (std::size_t t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

// Deterministic tree-style reduction: per-chunk partials are computed with
// per_chunk(lo, hi) and combined in ascending chunk order with combine(a, b).
// The chunk layout is independent of the thread count, so the result is
// bit-stable across 1..n threads.
template <class T, class PerChunk, class Combine>
T chunked_reduce(std::size_t n, T identity, int threads, PerChunk&& per_chunk, Combine&& combine) {
    threads = resolve_threads(threads);
    const std::size_t chunks = detail::chunk_count(n);
    if (chunks == 0) return identity;
    std::vector<T> partials(chunks, identity);
    auto compute = [&](std::size_t c) {
        const std::size_t lo = c * detail::kChunkSize;
        const std::size_t hi = std::min(lo + detail::kChunkSize, n);
        partials[c] = per_chunk(lo, hi);
    };
    if (threads <= 1 || chunks <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) compute(c);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= chunks) return;
                compute(c);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), chunks);
        pool.reserve(nw);
        for (std::size_t t = 0; t < nw; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    T acc = partials[0];
    for (std::size_t c = 1; c < chunks; ++c) acc = combine(acc, partials[c]);
    return acc;
}

}  // namespace argmm
