#include "rage/retrieval/snippets.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "rage/error.hpp"

namespace rage::retrieval {

Snippet best_snippet(const corpus::Review& review, std::span<const std::string> query, std::size_t window,
                     const VectorLookup& vectors) {
  const auto words = corpus::words_of(review.tokens);
  if (words.empty()) throw Error(ErrorCode::kUndefinedDistance, "review " + review.review_id + " is empty");
  const BagOfWords query_bag = bag_of_words(query);
  const std::size_t width = std::min(window, words.size());
  Snippet best;
  best.review_id = review.review_id;
  best.score = std::numeric_limits<double>::infinity();
  for (std::size_t offset = 0; offset + width <= words.size(); ++offset) {
    std::span<const std::string> slice(words.data() + offset, width);
    const double score = wmd(bag_of_words(slice), query_bag, vectors);
    if (score < best.score) {
      best.score = score;
      best.offset = offset;
      best.tokens.assign(slice.begin(), slice.end());
    }
  }
  return best;
}

std::vector<std::string> training_query(const corpus::QAPair& pair) {
  auto query = corpus::words_of(pair.question);
  for (const auto& t : pair.answer) query.push_back(t.word);
  return query;
}

QueryExpansion expand_question(const corpus::QAPair& question, std::span<const corpus::QAPair> index,
                               const VectorLookup& vectors) {
  const auto words = corpus::words_of(question.question);
  const BagOfWords bag = bag_of_words(words);
  const corpus::QAPair* nearest = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& candidate : index) {
    if (candidate.product_id == question.product_id) continue;
    const auto other = corpus::words_of(candidate.question);
    const double d = wmd(bag, bag_of_words(other), vectors);
    if (!nearest || d < best) {
      nearest = &candidate;
      best = d;
    }
  }
  if (!nearest) throw Error(ErrorCode::kNoExpansion, "no answered question from another product to expand " + question.pair_id);
  QueryExpansion out{words, nearest->pair_id, best};
  for (const auto& t : nearest->answer) out.query.push_back(t.word);
  return out;
}

double calibrate_pi(std::span<const std::vector<double>> candidate_scores_per_pair) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& scores : candidate_scores_per_pair) {
    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t take = std::min(sorted.size(), kTopSnippetsForThreshold);
    for (std::size_t i = 0; i < take; ++i) total += sorted[i];
    count += take;
  }
  if (count == 0) throw Error(ErrorCode::kCalibration, "no candidate snippets to calibrate the threshold");
  return total / static_cast<double>(count);
}

namespace {

SnippetSet filter_candidates(std::vector<Snippet> candidates, double pi) {
  SnippetSet set;
  for (auto& s : candidates) {
    if (s.score <= pi) set.snippets.push_back(std::move(s));
  }
  set.excluded = set.snippets.size() < 2;
  return set;
}

std::vector<Snippet> candidates_for(std::span<const std::string> query, std::span<const corpus::Review* const> reviews,
                                    std::size_t window, const VectorLookup& vectors) {
  std::vector<Snippet> out;
  out.reserve(reviews.size());
  for (const auto* review : reviews) out.push_back(best_snippet(*review, query, window, vectors));
  return out;
}

}  // namespace

SnippetSet collect_snippets(std::span<const std::string> query, std::span<const corpus::Review* const> reviews,
                            double pi, std::size_t window, const VectorLookup& vectors) {
  if (!(pi > 0.0)) throw Error(ErrorCode::kContractViolation, "snippet threshold must be positive");
  std::vector<const corpus::Review*> ordered(reviews.begin(), reviews.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const corpus::Review* a, const corpus::Review* b) { return a->review_id < b->review_id; });
  return filter_candidates(candidates_for(query, ordered, window, vectors), pi);
}

SnippetCache build_snippet_cache(const corpus::Dataset& dataset, const VectorLookup& vectors,
                                 const RetrievalOptions& options) {
  std::map<std::string, std::vector<const corpus::Review*>> by_product;
  for (const auto& r : dataset.reviews) by_product[r.product_id].push_back(&r);
  for (auto& [_, list] : by_product) {
    std::sort(list.begin(), list.end(),
              [](const corpus::Review* a, const corpus::Review* b) { return a->review_id < b->review_id; });
  }
  std::vector<corpus::QAPair> index;
  for (const auto& p : dataset.pairs) {
    if (p.split == corpus::Split::kTrain) index.push_back(p);
  }

  std::vector<std::vector<Snippet>> candidates(dataset.pairs.size());
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const auto& pair = dataset.pairs[i];
    const auto query = pair.split == corpus::Split::kTest ? expand_question(pair, index, vectors).query
                                                          : training_query(pair);
    static const std::vector<const corpus::Review*> kNone;
    auto it = by_product.find(pair.product_id);
    candidates[i] = candidates_for(query, it == by_product.end() ? kNone : it->second, options.window, vectors);
  }

  SnippetCache cache;
  if (options.pi) {
    cache.pi = *options.pi;
  } else {
    std::vector<std::vector<double>> scores;
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
      if (dataset.pairs[i].split != corpus::Split::kTrain) continue;
      std::vector<double> s;
      for (const auto& c : candidates[i]) s.push_back(c.score);
      scores.push_back(std::move(s));
    }
    cache.pi = calibrate_pi(scores);
    cache.calibrated = true;
  }
  if (!(cache.pi > 0.0)) throw Error(ErrorCode::kCalibration, "snippet threshold must be positive");
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    auto set = filter_candidates(std::move(candidates[i]), cache.pi);
    set.pair_id = dataset.pairs[i].pair_id;
    cache.sets.push_back(std::move(set));
  }
  return cache;
}

}  // namespace rage::retrieval
