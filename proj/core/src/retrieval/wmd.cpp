#include "rage/retrieval/wmd.hpp"

#include <cmath>
#include <map>

#include "rage/error.hpp"
#include "rage/retrieval/transport.hpp"

namespace rage::retrieval {

BagOfWords bag_of_words(std::span<const std::string> tokens) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  BagOfWords bag;
  for (auto& [word, count] : counts) {
    bag.words.push_back(word);
    bag.counts.push_back(count);
    bag.total += count;
  }
  return bag;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double wmd(const BagOfWords& a, const BagOfWords& b, const VectorLookup& vectors) {
  if (a.total == 0 || b.total == 0) throw Error(ErrorCode::kUndefinedDistance, "wmd of an empty document");
  const std::size_t n = a.words.size(), m = b.words.size();
  std::vector<std::span<const double>> va, vb;
  for (const auto& w : a.words) va.push_back(vectors(w));
  for (const auto& w : b.words) vb.push_back(vectors(w));
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = a.words[i] == b.words[j] ? 0.0 : euclidean(va[i], vb[j]);
  }
  // Mass a_i / |A| becomes a_i * |B| units out of |A| * |B|, and likewise for B.
  std::vector<std::uint64_t> supply(n), demand(m);
  for (std::size_t i = 0; i < n; ++i) supply[i] = a.counts[i] * b.total;
  for (std::size_t j = 0; j < m; ++j) demand[j] = b.counts[j] * a.total;
  const double units = static_cast<double>(a.total) * static_cast<double>(b.total);
  return min_cost_transport(supply, demand, cost) / units;
}

double wmd(std::span<const std::string> a, std::span<const std::string> b, const VectorLookup& vectors) {
  return wmd(bag_of_words(a), bag_of_words(b), vectors);
}

}  // namespace rage::retrieval
