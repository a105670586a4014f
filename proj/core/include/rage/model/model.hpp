#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rage/corpus/dataset.hpp"
#include "rage/corpus/embeddings.hpp"
#include "rage/corpus/vocabulary.hpp"
#include "rage/model/config.hpp"
#include "rage/model/encoder.hpp"
#include "rage/model/generator.hpp"
#include "rage/numerics/tensor.hpp"
#include "rage/retrieval/weights.hpp"

namespace rage::model {

// Encoder outputs materialized for repeated decoding steps.
template <typename T>
struct EncodedQuestion {
  numerics::Tensor<T> z;
  numerics::Tensor<T> e;
  numerics::Tensor<T> attended;
};

// Prefix y_0..y_j plus, per generator layer, the layer-input rows already
// computed for y_0..y_{j-1}.
template <typename T>
struct DecoderState {
  std::vector<std::size_t> words;
  std::vector<std::size_t> tags;
  std::vector<std::vector<T>> layer_inputs;
  std::size_t processed = 0;

  std::size_t pending() const noexcept { return words.size() - processed; }
};

template <typename T>
struct StepResult {
  numerics::Tensor<T> log_probs;  // [1, V] for y_{j+1}
  // The position table is exhausted: the caller must end the sequence.
  bool must_end = false;
};

// Generator tag id for every word id: its dominating tag, with START mapped to
// the start tag and other reserved words to the unknown tag.
std::vector<std::size_t> decoder_tag_table(const corpus::Vocabulary& vocab, const corpus::PosStatistics& stats);

// Parameters of the question encoder and answer generator, plus the
// word -> dominating-tag table used for generator inputs.
template <typename T>
class Model {
 public:
  /// Fresh parameters: word table copied from `words` (frozen), zero biases,
  /// other weights drawn N(0, 1/fan_in) from `seed`.
  static Model create(const ModelConfig& config, const corpus::EmbeddingTable& words,
                      std::vector<std::size_t> decoder_tags, std::uint64_t seed);

  Model(ModelConfig config, numerics::ParameterSet<T> params, std::vector<std::size_t> decoder_tags);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  numerics::ParameterSet<T>& params() noexcept { return params_; }
  const numerics::ParameterSet<T>& params() const noexcept { return params_; }
  const EncoderParams<T>& encoder() const noexcept { return encoder_; }
  const GeneratorParams<T>& generator() const noexcept { return generator_; }
  const std::vector<std::size_t>& decoder_tags() const noexcept { return decoder_tags_; }

  // Tag id fed to the generator for `word` (its dominating tag).
  std::size_t decoder_tag(std::size_t word) const;
  // [START, y_1..y_n] with generator tags.
  TokenSequence decoder_inputs(const std::vector<std::size_t>& answer) const;

  // Magnified snippet embeddings as a [|V_q|, d] memory; empty vocab -> none.
  std::optional<numerics::Tensor<T>> review_memory(const retrieval::WeightedSnippetVocab& vocab) const;

  // Records the full teacher-forced computation on `g` and returns the
  // [n+1, V] log-probabilities of answer[0..n-1] followed by END.
  numerics::Var forward(numerics::Graph<T>& g, const TokenSequence& question, const std::vector<std::size_t>& answer,
                        const numerics::Tensor<T>* review) const;

  EncodedQuestion<T> encode(const TokenSequence& question) const;
  DecoderState<T> start() const;
  // Consumes the pending token of `state` and returns the next-word
  // distribution; identical to the matching row of forward().
  StepResult<T> step(DecoderState<T>& state, const EncodedQuestion<T>& question,
                     const numerics::Tensor<T>* review) const;
  void push(DecoderState<T>& state, std::size_t word) const;

  // Gradient-free full recomputation of forward().
  numerics::Tensor<T> log_probs(const TokenSequence& question, const std::vector<std::size_t>& answer,
                                const numerics::Tensor<T>* review) const;

 private:
  void bind();

  ModelConfig config_;
  numerics::ParameterSet<T> params_;
  std::vector<std::size_t> decoder_tags_;
  EncoderParams<T> encoder_;
  GeneratorParams<T> generator_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace rage::model
