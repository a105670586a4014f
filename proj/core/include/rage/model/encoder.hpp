#pragma once

#include <cstddef>
#include <vector>

#include "rage/model/config.hpp"
#include "rage/numerics/graph.hpp"

namespace rage::model {

// Word ids with their tag ids; position i of the sequence is implicit.
struct TokenSequence {
  std::vector<std::size_t> words;
  std::vector<std::size_t> tags;

  std::size_t size() const noexcept { return words.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

template <typename T>
struct EmbeddingParams {
  numerics::Parameter<T>* word = nullptr;
  numerics::Parameter<T>* pos = nullptr;  // null when POS embeddings are disabled
  numerics::Parameter<T>* position = nullptr;
};

template <typename T>
struct ConvParams {
  numerics::Parameter<T>* weight = nullptr;  // [k * d, 2d]
  numerics::Parameter<T>* bias = nullptr;    // [1, 2d]
};

template <typename T>
struct EncoderParams {
  EmbeddingParams<T> embedding;
  std::vector<ConvParams<T>> layers;
  numerics::Parameter<T>* out_weight = nullptr;  // [d, d]
  numerics::Parameter<T>* out_bias = nullptr;    // [1, d]
  std::size_t kernel = 2;
};

template <typename T>
EmbeddingParams<T> bind_embedding(numerics::ParameterSet<T>& params, const ModelConfig& config);
template <typename T>
EncoderParams<T> bind_encoder(numerics::ParameterSet<T>& params, const ModelConfig& config);

/// Sum of word, POS and absolute-position embeddings per token; token i gets
/// position first_position + i. Throws kLength past the position table.
template <typename T>
numerics::Var embed(numerics::Graph<T>& g, const EmbeddingParams<T>& params, const TokenSequence& tokens,
                    std::size_t first_position);

template <typename T>
struct EncoderOutput {
  numerics::Var z;          // [m, d] encoder outputs
  numerics::Var e;          // [m, d] input embeddings
  numerics::Var attended;   // z + e, the values read by attention
};

/// Stacked gated convolutions with residual connections over the question
/// embeddings (positions 1..m), followed by a linear output map:
///   x^l = glu(conv_k(x^{l-1})) + x^{l-1},  x^0 = e,  z = x^L W_e + b_e
/// Each layer pads so that its output has the input's length.
template <typename T>
EncoderOutput<T> encode(numerics::Graph<T>& g, const EncoderParams<T>& params, const TokenSequence& question);

}  // namespace rage::model
