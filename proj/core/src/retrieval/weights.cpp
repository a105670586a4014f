#include "rage/retrieval/weights.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "rage/error.hpp"

namespace rage::retrieval {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

WeightedSnippetVocab snippet_word_weights(std::span<const Snippet> snippets, const VectorLookup& vectors) {
  if (snippets.empty()) throw Error(ErrorCode::kContractViolation, "snippet weighting needs at least one snippet");
  WeightedSnippetVocab out;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::set<std::string>> members;
  for (const auto& s : snippets) {
    members.emplace_back(s.tokens.begin(), s.tokens.end());
    for (const auto& w : s.tokens) {
      if (index.emplace(w, out.entries.size()).second) out.entries.push_back({w, 0.0, 0.0});
    }
  }
  const double n = static_cast<double>(snippets.size());
  double max_weight = 0.0;
  for (auto& entry : out.entries) {
    const auto v = vectors(entry.word);
    std::size_t frequency = 0;
    double relevance = 0.0;
    for (const auto& words : members) {
      if (words.contains(entry.word)) ++frequency;
      double best = 0.0;
      for (const auto& w : words) best = std::max(best, w == entry.word ? 1.0 : cosine(v, vectors(w)));
      relevance += best;
    }
    entry.weight = static_cast<double>(frequency) / n * relevance;
    max_weight = std::max(max_weight, entry.weight);
  }
  if (!(max_weight > 0.0)) throw Error(ErrorCode::kDegenerateWeights, "all snippet word weights are zero");

  out.dim = vectors(out.entries.front().word).size();
  out.magnified.assign(out.entries.size() * out.dim, 0.0);
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    auto& entry = out.entries[i];
    entry.normalized = entry.weight / max_weight;
    const auto v = vectors(entry.word);
    for (std::size_t j = 0; j < out.dim; ++j) out.magnified[i * out.dim + j] = entry.normalized * v[j];
  }
  return out;
}

}  // namespace rage::retrieval
