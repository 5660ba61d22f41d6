#ifndef DA3_PARALLEL_HPP
#define DA3_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "common.hpp"

namespace da3 {

/// Worker count: DA3_THREADS if set, otherwise the hardware concurrency.
inline int worker_count()
{
    if (const char* env = std::getenv("DA3_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw Error(ErrorKind::config, std::string("DA3_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<int>(std::min<long>(v, 256));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads and returns the
/// results in index order. If tasks throw, the exception of the lowest failing
/// index is rethrown; indices are claimed in order, so that index is the same
/// for every worker count.
template <class Fn>
auto parallel_map(long n, Fn&& fn, int workers = worker_count())
{
    using T = decltype(fn(0L));
    std::vector<T> out(static_cast<std::size_t>(std::max(0L, n)));
    if (n <= 0) return out;
    workers = static_cast<int>(std::clamp<long>(workers, 1, n));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    long error_index = n;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

} // namespace da3

#endif // DA3_PARALLEL_HPP
