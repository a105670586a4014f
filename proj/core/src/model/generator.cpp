#include "rage/model/generator.hpp"

#include <array>
#include <string>

#include "rage/error.hpp"

namespace rage::model {

using numerics::Graph;
using numerics::Var;

template <typename T>
GeneratorParams<T> bind_generator(numerics::ParameterSet<T>& params, const ModelConfig& config) {
  GeneratorParams<T> out;
  out.embedding = bind_embedding(params, config);
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    const std::string id = std::to_string(l);
    DecoderLayerParams<T> layer;
    layer.conv = {&params.at("dec.conv" + id + ".weight"), &params.at("dec.conv" + id + ".bias")};
    layer.attention = {&params.at("dec.att" + id + ".weight"), &params.at("dec.att" + id + ".bias")};
    if (config.use_review) {
      const std::string gate = "dec.gate" + id;
      layer.gate = GateParams<T>{&params.at(gate + ".hidden.weight"), &params.at(gate + ".hidden.bias"),
                                 &params.at(gate + ".out.weight"), &params.at(gate + ".out.bias")};
    }
    out.layers.push_back(layer);
  }
  out.out_weight = &params.at("dec.out.weight");
  out.out_bias = &params.at("dec.out.bias");
  out.kernel = config.decoder_kernel;
  return out;
}

template <typename T>
QuestionAttention question_attention(Graph<T>& g, const AttentionParams<T>& params, Var hidden, Var target_embedding,
                                     const EncoderOutput<T>& question) {
  const Var query =
      g.add(g.add_row(g.matmul(hidden, g.parameter(*params.weight)), g.parameter(*params.bias)), target_embedding);
  const Var weights = g.softmax_rows(g.matmul_nt(query, question.z));
  return {g.matmul(weights, question.attended), weights};
}

template <typename T>
ReviewInjection review_injection(Graph<T>& g, const GateParams<T>* gate, Var hidden, Var context,
                                 std::optional<Var> review) {
  if (!gate || !review) return {g.add(hidden, context), {}, {}, {}, false};
  const Var weights = g.softmax_rows(g.matmul_nt(context, *review));
  const Var summary = g.matmul(weights, *review);
  const std::array<Var, 3> features{hidden, context, summary};
  const Var h1 = g.tanh(g.add_row(g.matmul(g.concat_cols(features), g.parameter(*gate->hidden_weight)),
                                  g.parameter(*gate->hidden_bias)));
  const Var gate_value =
      g.sigmoid(g.add_row(g.matmul(h1, g.parameter(*gate->out_weight)), g.parameter(*gate->out_bias)));
  const Var updated =
      g.add(g.add(hidden, g.scale_rows(gate_value, context)), g.scale_rows(g.one_minus(gate_value), summary));
  return {updated, gate_value, summary, weights, true};
}

template <typename T>
Var decoder_layer(Graph<T>& g, const DecoderLayerParams<T>& layer, Var conv_input, numerics::Padding padding,
                  Var residual, Var target_embedding, const EncoderOutput<T>& question, std::optional<Var> review) {
  const Var conv =
      g.conv1d(conv_input, g.parameter(*layer.conv.weight), g.parameter(*layer.conv.bias), padding);
  const Var hidden = g.glu(conv);
  const auto attention = question_attention(g, layer.attention, hidden, target_embedding, question);
  const auto injected = review_injection(g, layer.gate ? &*layer.gate : nullptr, hidden, attention.context, review);
  return g.add(injected.hidden, residual);
}

template <typename T>
Var forward_train(Graph<T>& g, const GeneratorParams<T>& params, const EncoderOutput<T>& question,
                  const TokenSequence& inputs, std::optional<Var> review) {
  const Var embedded = embed(g, params.embedding, inputs, 0);
  Var x = embedded;
  for (const auto& layer : params.layers) {
    x = decoder_layer(g, layer, x, numerics::causal_padding(params.kernel), x, embedded, question, review);
  }
  const Var logits = g.add_row(g.matmul(x, g.parameter(*params.out_weight)), g.parameter(*params.out_bias));
  return g.log_softmax_rows(logits);
}

#define RAGE_INSTANTIATE_GENERATOR(T)                                                                         \
  template GeneratorParams<T> bind_generator(numerics::ParameterSet<T>&, const ModelConfig&);                 \
  template QuestionAttention question_attention(Graph<T>&, const AttentionParams<T>&, Var, Var,               \
                                                const EncoderOutput<T>&);                                     \
  template ReviewInjection review_injection(Graph<T>&, const GateParams<T>*, Var, Var, std::optional<Var>);   \
  template Var decoder_layer(Graph<T>&, const DecoderLayerParams<T>&, Var, numerics::Padding, Var, Var,       \
                             const EncoderOutput<T>&, std::optional<Var>);                                    \
  template Var forward_train(Graph<T>&, const GeneratorParams<T>&, const EncoderOutput<T>&,                   \
                             const TokenSequence&, std::optional<Var>);

RAGE_INSTANTIATE_GENERATOR(float)
RAGE_INSTANTIATE_GENERATOR(double)
#undef RAGE_INSTANTIATE_GENERATOR

}  // namespace rage::model
