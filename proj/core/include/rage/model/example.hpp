#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rage/corpus/embeddings.hpp"
#include "rage/corpus/types.hpp"
#include "rage/corpus/vocabulary.hpp"
#include "rage/model/model.hpp"
#include "rage/retrieval/snippets.hpp"

namespace rage::model {

// A QA pair in model form: encoded question, gold answer ids and the review
// memory built from its snippet set.
template <typename T>
struct Example {
  std::string pair_id;
  TokenSequence question;
  std::vector<std::size_t> answer;
  std::vector<std::string> reference;  // gold answer words, before UNK mapping
  std::optional<numerics::Tensor<T>> review;

  // Predicted tokens: the answer plus END.
  std::size_t tokens() const noexcept { return answer.size() + 1; }
  const numerics::Tensor<T>* review_ptr() const noexcept { return review ? &*review : nullptr; }
};

struct ExampleStats {
  std::size_t kept = 0;
  std::size_t excluded = 0;  // fewer than two snippets
};

/// Examples for every pair of `split` whose snippet set is not excluded, in
/// dataset order. `cache` must hold one set per dataset pair. The review
/// memory is only built when the model uses review guidance.
template <typename T>
std::vector<Example<T>> make_examples(const corpus::Dataset& dataset, corpus::Split split,
                                      const corpus::Vocabulary& vocab, const retrieval::SnippetCache& cache,
                                      const corpus::EmbeddingLookup& vectors, const Model<T>& model,
                                      ExampleStats* stats = nullptr);

TokenSequence question_tokens(const std::vector<corpus::TaggedToken>& question, const corpus::Vocabulary& vocab);

}  // namespace rage::model
