#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rage/corpus/types.hpp"
#include "rage/retrieval/wmd.hpp"

namespace rage::retrieval {

inline constexpr std::size_t kDefaultWindow = 10;
inline constexpr std::size_t kTopSnippetsForThreshold = 10;

struct Snippet {
  std::vector<std::string> tokens;  // contiguous window of the source review
  double score = 0.0;               // wmd to the query, minimal over the review's windows
  std::string review_id;
  std::size_t offset = 0;

  friend bool operator==(const Snippet&, const Snippet&) = default;
};

struct SnippetSet {
  std::string pair_id;
  std::vector<Snippet> snippets;
  // Fewer than two snippets passed the threshold.
  bool excluded = false;

  friend bool operator==(const SnippetSet&, const SnippetSet&) = default;
};

/// Window of `window` consecutive tokens (stride 1) with the smallest wmd to
/// `query`; ties go to the earliest window. A review shorter than the window
/// is its own single window.
Snippet best_snippet(const corpus::Review& review, std::span<const std::string> query, std::size_t window,
                     const VectorLookup& vectors);

// Query used for a pair whose answer is known: question then answer.
std::vector<std::string> training_query(const corpus::QAPair& pair);

struct QueryExpansion {
  std::vector<std::string> query;
  std::string source_pair_id;
  double distance = 0.0;
};

/// Appends to `question` the answer of the indexed pair (from a different
/// product) whose question is nearest by wmd; ties go to the earliest pair.
/// Throws kNoExpansion when no eligible pair exists.
QueryExpansion expand_question(const corpus::QAPair& question, std::span<const corpus::QAPair> index,
                               const VectorLookup& vectors);

/// Mean score over the union of every pair's top-10 (lowest wmd) candidate
/// snippets; pairs with fewer candidates contribute all of them. Throws
/// kCalibration when there are no scores at all.
double calibrate_pi(std::span<const std::vector<double>> candidate_scores_per_pair);

/// Best snippet per review, keeping those with score <= pi, ordered by review.
/// The set is flagged excluded when fewer than two remain. Requires pi > 0.
SnippetSet collect_snippets(std::span<const std::string> query, std::span<const corpus::Review* const> reviews,
                            double pi, std::size_t window, const VectorLookup& vectors);

struct RetrievalOptions {
  std::size_t window = kDefaultWindow;
  // Fixed threshold; calibrated from training pairs when empty.
  std::optional<double> pi;
};

struct SnippetCache {
  double pi = 0.0;
  bool calibrated = false;
  std::vector<SnippetSet> sets;  // one per dataset pair, in dataset order
};

// Runs retrieval for every pair: training/validation pairs query with
// question+answer, test pairs with the expanded question.
SnippetCache build_snippet_cache(const corpus::Dataset& dataset, const VectorLookup& vectors,
                                 const RetrievalOptions& options);

}  // namespace rage::retrieval
