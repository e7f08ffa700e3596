#pragma once

#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace migflow {

/// Runs f(i) for i in [0, n) on `workers` threads over static index blocks.
/// Callers write results into pre-sized slots, so output is identical for any
/// worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& f) {
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t count = std::min<std::size_t>(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(count);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < count; ++w) {
        threads.emplace_back([&, w] {
            const std::size_t begin = n * w / count;
            const std::size_t end = n * (w + 1) / count;
            try {
                for (std::size_t i = begin; i < end; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace migflow
