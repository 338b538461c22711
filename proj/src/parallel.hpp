#pragma once

// Internal helpers shared by the simulator and the training engine.

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace snn::detail {

// Static striding: item i runs on worker i % workers, the caller being worker 0.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& fn)
{
    const auto workers = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1U), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                fn(i);
            }
        });
    }
    for (std::size_t i = 0; i < n; i += workers) {
        fn(i);
    }
}

} // namespace snn::detail
