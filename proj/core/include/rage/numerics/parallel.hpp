#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace rage::numerics {

// Kinds of data-parallel region. Each call to parallel_for is one region and
// ends in one join barrier.
enum class Region : std::uint8_t { kConvolution, kMatMul, kHypotheses, kCount };

// Runs body(i) for i in [begin, end). Iterations must be independent. Work is
// split across threads only when `cost` (a rough flop estimate for the whole
// range) makes it worthwhile; the region is counted either way.
void parallel_for(Region region, std::size_t begin, std::size_t end, std::size_t cost,
                  const std::function<void(std::size_t)>& body);

// Upper bound on worker threads (default: hardware concurrency).
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Monotonic count of regions entered, per kind. Tests read deltas.
std::uint64_t region_count(Region region);

}  // namespace rage::numerics
