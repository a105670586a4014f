#pragma once

#include <cstdint>
#include <span>

namespace rage::retrieval {

/// Exact minimum-cost transportation between integer supplies and demands of
/// equal total, with cost[i * demand.size() + j] per unit moved from i to j.
/// Returns the optimal total cost. Solved as a min-cost flow by successive
/// shortest paths; integral masses make the optimum a vertex of the
/// transportation polytope.
double min_cost_transport(std::span<const std::uint64_t> supply, std::span<const std::uint64_t> demand,
                          std::span<const double> cost);

}  // namespace rage::retrieval
