#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace polydg {

namespace detail {
inline std::atomic<unsigned>& thread_count()
{
    static std::atomic<unsigned> n{1};
    return n;
}
} // namespace detail

/// Worker threads used by per-cell loops; 1 runs everything on the calling thread.
inline void set_num_threads(unsigned n) { detail::thread_count() = std::max(1u, n); }
inline unsigned num_threads() { return detail::thread_count(); }

/// Runs body(i) for i in [0, n) in contiguous chunks. Each index is written by exactly
/// one thread, so results stored per index are independent of the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body)
{
    const unsigned t = std::min<std::size_t>(num_threads(), std::max<std::size_t>(n, 1));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    const std::size_t chunk = (n + t - 1) / t;
    for (unsigned w = 0; w < t; ++w)
        pool.emplace_back([&, w] {
            try {
                const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace polydg
