#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace inhomo {

/// Runs task(i) for i in [0, count) on `workers` threads and returns the results
/// indexed by i, so any reduction done by the caller in index order is
/// independent of the worker count. The first exception thrown is rethrown.
template <class Result, class Task>
std::vector<Result> parallel_map(std::size_t count, int workers, Task&& task) {
    std::vector<Result> out(count);
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = task(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto run = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                out[i] = task(i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!err) err = std::current_exception();
                next = count;
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        int n = std::min<int>(workers, static_cast<int>(count));
        for (int k = 0; k < n; ++k) pool.emplace_back(run);
    }
    if (err) std::rethrow_exception(err);
    return out;
}

} // namespace inhomo
