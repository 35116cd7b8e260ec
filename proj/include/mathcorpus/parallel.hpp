#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mathcorpus {

/// Runs fn(i) for i in [0, n) across `jobs` threads. Work is partitioned by
/// index, results land in preallocated slots, so the outcome is identical
/// for any worker count.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (jobs > n) jobs = n;
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) {
        threads.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += jobs) fn(i);
        });
    }
    for (auto& th : threads) th.join();
}

} // namespace mathcorpus
