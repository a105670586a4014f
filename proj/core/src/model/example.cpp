#include "rage/model/example.hpp"

#include "rage/error.hpp"
#include "rage/retrieval/weights.hpp"

namespace rage::model {

TokenSequence question_tokens(const std::vector<corpus::TaggedToken>& question, const corpus::Vocabulary& vocab) {
  TokenSequence out;
  for (const auto& token : question) {
    out.words.push_back(vocab.word_id(token.word));
    out.tags.push_back(vocab.tag_id(token.pos));
  }
  return out;
}

template <typename T>
std::vector<Example<T>> make_examples(const corpus::Dataset& dataset, corpus::Split split,
                                      const corpus::Vocabulary& vocab, const retrieval::SnippetCache& cache,
                                      const corpus::EmbeddingLookup& vectors, const Model<T>& model,
                                      ExampleStats* stats) {
  if (cache.sets.size() != dataset.pairs.size()) {
    throw Error(ErrorCode::kFormat, "snippet cache has " + std::to_string(cache.sets.size()) +
                                        " entries for " + std::to_string(dataset.pairs.size()) + " pairs");
  }
  ExampleStats local;
  std::vector<Example<T>> out;
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const auto& pair = dataset.pairs[i];
    if (pair.split != split) continue;
    const auto& set = cache.sets[i];
    if (set.pair_id != pair.pair_id) {
      throw Error(ErrorCode::kFormat, "snippet cache entry " + set.pair_id + " does not match pair " + pair.pair_id);
    }
    if (set.excluded) {
      ++local.excluded;
      continue;
    }
    Example<T> ex;
    ex.pair_id = pair.pair_id;
    ex.question = question_tokens(pair.question, vocab);
    ex.reference = corpus::words_of(pair.answer);
    ex.answer = vocab.encode(ex.reference);
    if (model.config().use_review) {
      ex.review = model.review_memory(retrieval::snippet_word_weights(set.snippets, vectors));
    }
    out.push_back(std::move(ex));
    ++local.kept;
  }
  if (stats) *stats = local;
  return out;
}

template std::vector<Example<float>> make_examples(const corpus::Dataset&, corpus::Split, const corpus::Vocabulary&,
                                                   const retrieval::SnippetCache&, const corpus::EmbeddingLookup&,
                                                   const Model<float>&, ExampleStats*);
template std::vector<Example<double>> make_examples(const corpus::Dataset&, corpus::Split, const corpus::Vocabulary&,
                                                    const retrieval::SnippetCache&, const corpus::EmbeddingLookup&,
                                                    const Model<double>&, ExampleStats*);

}  // namespace rage::model
