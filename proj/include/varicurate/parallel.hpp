#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

namespace varicurate {

namespace detail {

inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};  // 0 = not configured
    return cap;
}

inline unsigned threads_from_env() {
    const char* raw = std::getenv("VARICURATE_THREADS");
    if (raw == nullptr) return 1;
    std::string_view text(raw);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) return 1;
    return value;
}

}  // namespace detail

/// Caps worker threads used by batched operations. Results never depend on it.
inline void set_thread_count(unsigned n) { detail::thread_cap().store(std::max(1u, n)); }

inline unsigned thread_count() {
    unsigned n = detail::thread_cap().load();
    return n == 0 ? detail::threads_from_env() : n;
}

/// Runs fn(i) for i in [0, n). Each index is handled exactly once, so as long
/// as fn(i) writes only to slot i the output is independent of thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace varicurate
