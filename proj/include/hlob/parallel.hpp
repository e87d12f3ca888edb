#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace hlob {

// Worker count: hardware concurrency capped by the HLP_THREADS environment variable.
[[nodiscard]] std::size_t worker_count();

// Runs body(i) for i in [0, count). Each index is executed exactly once; the caller
// writes results into index-addressed slots so output does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Engine for logical stream `stream`, sub-index `index` of a user seed. Distinct
// (stream, index) pairs give statistically independent engines.
[[nodiscard]] std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

namespace streams {
inline constexpr std::uint64_t hawkes = 1;
inline constexpr std::uint64_t chain = 2;
inline constexpr std::uint64_t replication = 3;
inline constexpr std::uint64_t monte_carlo = 4;
inline constexpr std::uint64_t gbm_path = 5;
} // namespace streams

} // namespace hlob
