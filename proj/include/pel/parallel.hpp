#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pel {

/// Number of worker slots for independent experiment cells, read from the
/// PEL_WORKERS environment variable (default 1).
inline std::size_t worker_slots() {
    const char* env = std::getenv("PEL_WORKERS");
    if (env == nullptr) return 1;
    try {
        const long n = std::stol(env);
        return n > 0 ? static_cast<std::size_t>(n) : 1;
    } catch (const std::exception&) {
        return 1;
    }
}

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// run exactly once; callers write results into slot i so assembly order does
/// not depend on scheduling. `body` must not throw.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    const std::size_t n_threads = workers < count ? workers : count;
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
    }
}

}  // namespace pel
