#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nca {

/// Worker count for a request of `threads` (0 = hardware concurrency).
inline std::size_t resolve_threads(std::size_t threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    return threads;
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks never share
/// output, so results are independent of the thread count.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::min(resolve_threads(threads), n);
    if (threads <= 1) {
        if (n) fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    pool.reserve(threads - 1);
    const std::size_t chunk = (n + threads - 1) / threads;
    auto run = [&](std::size_t i) {
        const std::size_t b = i * chunk, e = std::min(n, b + chunk);
        try {
            if (b < e) fn(b, e);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(run, i);
    run(0);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace nca
