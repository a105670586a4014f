#include "rage/retrieval/transport.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

#include "rage/error.hpp"

namespace rage::retrieval {

namespace {

struct Edge {
  std::size_t to;
  std::uint64_t capacity;
  double cost;
};

class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes) : adjacency_(nodes) {}

  void add_edge(std::size_t from, std::size_t to, std::uint64_t capacity, double cost) {
    adjacency_[from].push_back(edges_.size());
    edges_.push_back({to, capacity, cost});
    adjacency_[to].push_back(edges_.size());
    edges_.push_back({from, 0, -cost});
  }

  // Successive shortest augmenting paths with SPFA (residual costs may be
  // negative). Returns the cost of the flow pushed.
  double run(std::size_t source, std::size_t sink, std::uint64_t required) {
    const std::size_t n = adjacency_.size();
    double total = 0.0;
    std::uint64_t pushed = 0;
    std::vector<double> dist(n);
    std::vector<std::size_t> via(n);
    std::vector<char> queued(n);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    while (pushed < required) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(via.begin(), via.end(), kNone);
      std::fill(queued.begin(), queued.end(), 0);
      std::deque<std::size_t> queue{source};
      dist[source] = 0.0;
      queued[source] = 1;
      while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        queued[u] = 0;
        for (std::size_t e : adjacency_[u]) {
          const auto& edge = edges_[e];
          if (edge.capacity == 0) continue;
          const double candidate = dist[u] + edge.cost;
          // The epsilon guards against cycling on rounding noise around
          // zero-cost residual cycles.
          if (candidate < dist[edge.to] - 1e-15) {
            dist[edge.to] = candidate;
            via[edge.to] = e;
            if (!queued[edge.to]) {
              queued[edge.to] = 1;
              queue.push_back(edge.to);
            }
          }
        }
      }
      if (via[sink] == kNone) throw Error(ErrorCode::kContractViolation, "transport problem is infeasible");
      std::uint64_t bottleneck = required - pushed;
      for (std::size_t v = sink; v != source; v = edges_[via[v] ^ 1].to) {
        bottleneck = std::min(bottleneck, edges_[via[v]].capacity);
      }
      for (std::size_t v = sink; v != source; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].capacity -= bottleneck;
        edges_[via[v] ^ 1].capacity += bottleneck;
        total += static_cast<double>(bottleneck) * edges_[via[v]].cost;
      }
      pushed += bottleneck;
    }
    return total;
  }

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Edge> edges_;
};

}  // namespace

double min_cost_transport(std::span<const std::uint64_t> supply, std::span<const std::uint64_t> demand,
                          std::span<const double> cost) {
  const std::size_t n = supply.size(), m = demand.size();
  if (cost.size() != n * m) throw Error(ErrorCode::kInvalidShape, "transport cost matrix has wrong size");
  const std::uint64_t total = std::accumulate(supply.begin(), supply.end(), std::uint64_t{0});
  if (total != std::accumulate(demand.begin(), demand.end(), std::uint64_t{0})) {
    throw Error(ErrorCode::kContractViolation, "transport supplies and demands must balance");
  }
  const std::size_t source = n + m, sink = n + m + 1;
  FlowNetwork net(n + m + 2);
  for (std::size_t i = 0; i < n; ++i) net.add_edge(source, i, supply[i], 0.0);
  for (std::size_t j = 0; j < m; ++j) net.add_edge(n + j, sink, demand[j], 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) net.add_edge(i, n + j, total, cost[i * m + j]);
  }
  return net.run(source, sink, total);
}

}  // namespace rage::retrieval
