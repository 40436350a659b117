#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace activeseg {

/// Process-wide worker count used by the data-parallel maps (feature
/// extraction, dense prediction, MC sampling). 1 means run inline.
void set_thread_count(std::size_t n) noexcept;
std::size_t thread_count() noexcept;

/// Runs fn(begin, end) over disjoint chunks of [0, n). Every index is visited
/// exactly once; fn must only write to locations owned by its chunk so that
/// results do not depend on the schedule.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, n / 4096));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        pool.emplace_back([&, b, e, w] {
            try {
                if (b < e) fn(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace activeseg
