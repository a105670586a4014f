#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rage/retrieval/snippets.hpp"
#include "rage/retrieval/wmd.hpp"

namespace rage::retrieval {

// Question-specific snippet vocabulary with max-normalized word weights and
// the correspondingly scaled embeddings.
struct WeightedSnippetVocab {
  struct Entry {
    std::string word;
    double weight = 0.0;      // raw
    double normalized = 0.0;  // weight / max weight, in (0, 1]
  };

  std::vector<Entry> entries;    // first-occurrence order over the snippets
  std::size_t dim = 0;
  std::vector<double> magnified;  // entries.size() x dim: normalized * embedding

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  std::span<const double> row(std::size_t i) const { return {magnified.data() + i * dim, dim}; }
};

double cosine(std::span<const double> a, std::span<const double> b);

/// For each word r in the union of the snippets:
///   weight(r) = (#snippets containing r / n) * sum over snippets s of rel_max(r, s)
/// where rel_max(r, s) is the largest cosine between r and a word of s,
/// floored at 0, on the raw embeddings (a word's similarity to itself is 1). Weights are divided by their maximum
/// and each embedding is scaled by its normalized weight.
/// Throws kContractViolation for an empty set and kDegenerateWeights when the
/// maximum weight is not positive.
WeightedSnippetVocab snippet_word_weights(std::span<const Snippet> snippets, const VectorLookup& vectors);

}  // namespace rage::retrieval
