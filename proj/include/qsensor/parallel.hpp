#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qsensor {

inline int resolve_workers(int requested)
{
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks must write
// only to their own output slot; results are then independent of the worker
// count and of scheduling order. The first exception thrown by any task is
// rethrown on the calling thread after all workers have stopped.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
    workers = resolve_workers(workers);
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n); // stop handing out work
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    pool.reserve(nthreads);
    for (std::size_t k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace qsensor
