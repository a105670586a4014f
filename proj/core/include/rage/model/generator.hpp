#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rage/model/encoder.hpp"

namespace rage::model {

template <typename T>
struct AttentionParams {
  numerics::Parameter<T>* weight = nullptr;  // [d, d]
  numerics::Parameter<T>* bias = nullptr;    // [1, d]
};

// Two-layer perceptron [h, c, o] (3d) -> tanh (d) -> logistic scalar.
template <typename T>
struct GateParams {
  numerics::Parameter<T>* hidden_weight = nullptr;  // [3d, d]
  numerics::Parameter<T>* hidden_bias = nullptr;    // [1, d]
  numerics::Parameter<T>* out_weight = nullptr;     // [d, 1]
  numerics::Parameter<T>* out_bias = nullptr;       // [1, 1]
};

template <typename T>
struct DecoderLayerParams {
  ConvParams<T> conv;
  AttentionParams<T> attention;
  std::optional<GateParams<T>> gate;  // absent when review guidance is off
};

template <typename T>
struct GeneratorParams {
  EmbeddingParams<T> embedding;
  std::vector<DecoderLayerParams<T>> layers;
  numerics::Parameter<T>* out_weight = nullptr;  // [d, V]
  numerics::Parameter<T>* out_bias = nullptr;    // [1, V]
  std::size_t kernel = 4;
};

template <typename T>
GeneratorParams<T> bind_generator(numerics::ParameterSet<T>& params, const ModelConfig& config);

struct QuestionAttention {
  numerics::Var context;  // [J, d]
  numerics::Var weights;  // [J, m]
};

/// d = h W_d + b_d + e_y;  a = softmax over question positions of d . z_i;
/// c = sum_i a_i (z_i + e_{x_i}).
template <typename T>
QuestionAttention question_attention(numerics::Graph<T>& g, const AttentionParams<T>& params, numerics::Var hidden,
                                     numerics::Var target_embedding, const EncoderOutput<T>& question);

struct ReviewInjection {
  numerics::Var hidden;   // updated hidden state
  numerics::Var gate;     // [J, 1]; meaningful only when applied
  numerics::Var summary;  // o, [J, d]; meaningful only when applied
  numerics::Var weights;  // [J, |V_q|]; meaningful only when applied
  bool applied = false;
};

/// With a gate and a non-empty review memory (rows are the magnified snippet
/// word embeddings):
///   a = softmax_i(c . w_i),  o = sum_i a_i w_i,  g = f([h, c, o]),
///   h <- h + g c + (1 - g) o.
/// Otherwise the plain update h <- h + c, with applied = false.
template <typename T>
ReviewInjection review_injection(numerics::Graph<T>& g, const GateParams<T>* gate, numerics::Var hidden,
                                 numerics::Var context, std::optional<numerics::Var> review);

/// One generator layer: causal gated convolution of `conv_input` (padded by
/// `padding`), question attention, review injection, then the residual from
/// `residual` (the layer input rows aligned with the output rows).
template <typename T>
numerics::Var decoder_layer(numerics::Graph<T>& g, const DecoderLayerParams<T>& layer, numerics::Var conv_input,
                            numerics::Padding padding, numerics::Var residual, numerics::Var target_embedding,
                            const EncoderOutput<T>& question, std::optional<numerics::Var> review);

/// Teacher-forced pass over decoder inputs y_0..y_n (positions 0..n). Returns
/// [n+1, V] next-word log-probabilities; row j conditions on y_0..y_j only.
/// Every layer processes all positions at once. Throws kLength beyond the
/// position table.
template <typename T>
numerics::Var forward_train(numerics::Graph<T>& g, const GeneratorParams<T>& params, const EncoderOutput<T>& question,
                            const TokenSequence& inputs, std::optional<numerics::Var> review);

}  // namespace rage::model
