#include "hlob/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hlob {

std::size_t worker_count() {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("HLP_THREADS")) {
        try {
            const long v = std::stol(cap);
            if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            // unparsable cap is ignored
        }
    }
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

} // namespace hlob
