#include "rage/numerics/parallel.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <thread>
#include <vector>

namespace rage::numerics {

namespace {

constexpr std::size_t kMinCostPerThread = std::size_t{1} << 20;

std::array<std::atomic<std::uint64_t>, static_cast<std::size_t>(Region::kCount)> g_regions{};
std::atomic<std::size_t> g_max_threads{std::max(1u, std::thread::hardware_concurrency())};

}  // namespace

void set_max_threads(std::size_t n) { g_max_threads = std::max<std::size_t>(1, n); }

std::size_t max_threads() { return g_max_threads; }

std::uint64_t region_count(Region region) { return g_regions[static_cast<std::size_t>(region)].load(); }

void parallel_for(Region region, std::size_t begin, std::size_t end, std::size_t cost,
                  const std::function<void(std::size_t)>& body) {
  g_regions[static_cast<std::size_t>(region)].fetch_add(1, std::memory_order_relaxed);
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min({g_max_threads.load(), n, std::max<std::size_t>(1, cost / kMinCostPerThread)});
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::size_t i = begin; i < std::min(end, begin + chunk); ++i) body(i);
}  // jthreads join here

}  // namespace rage::numerics
