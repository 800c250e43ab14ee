#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace refray {

inline unsigned hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Runs fn(begin, end) over contiguous chunks of [0, count). threads <= 1 runs
// inline on the calling thread, which is the bit-exact serial mode. Chunk
// boundaries depend only on (count, threads), so results that are written to
// disjoint indices are deterministic for any thread count.
template <class Fn>
void parallel_for_chunks(std::size_t count, unsigned threads, Fn&& fn) {
    if (count == 0) return;
    if (threads <= 1 || count == 1) {
        fn(static_cast<std::size_t>(0), count);
        return;
    }
    const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    const std::size_t chunk = (count + n_workers - 1) / n_workers;
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < n_workers; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Element-wise convenience wrapper.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    parallel_for_chunks(count, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace refray
