#include "rage/model/encoder.hpp"

#include <numeric>
#include <string>

#include "rage/error.hpp"

namespace rage::model {

using numerics::Graph;
using numerics::Var;

template <typename T>
EmbeddingParams<T> bind_embedding(numerics::ParameterSet<T>& params, const ModelConfig& config) {
  return {&params.at("embed.word"), config.use_pos ? &params.at("embed.pos") : nullptr, &params.at("embed.position")};
}

template <typename T>
EncoderParams<T> bind_encoder(numerics::ParameterSet<T>& params, const ModelConfig& config) {
  EncoderParams<T> out;
  out.embedding = bind_embedding(params, config);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const std::string prefix = "enc.conv" + std::to_string(l);
    out.layers.push_back({&params.at(prefix + ".weight"), &params.at(prefix + ".bias")});
  }
  out.out_weight = &params.at("enc.out.weight");
  out.out_bias = &params.at("enc.out.bias");
  out.kernel = config.encoder_kernel;
  return out;
}

template <typename T>
Var embed(Graph<T>& g, const EmbeddingParams<T>& params, const TokenSequence& tokens, std::size_t first_position) {
  if (tokens.words.empty()) throw Error(ErrorCode::kLength, "cannot embed an empty sequence");
  if (params.pos && tokens.tags.size() != tokens.words.size()) {
    throw Error(ErrorCode::kInvalidShape, "token and tag counts differ");
  }
  const std::size_t last = first_position + tokens.size() - 1;
  if (last >= params.position->tensor.rows()) {
    throw Error(ErrorCode::kLength, "position " + std::to_string(last) + " exceeds the position table");
  }
  std::vector<std::size_t> positions(tokens.size());
  std::iota(positions.begin(), positions.end(), first_position);
  Var e = g.gather_rows(g.parameter(*params.word), tokens.words);
  if (params.pos) e = g.add(e, g.gather_rows(g.parameter(*params.pos), tokens.tags));
  return g.add(e, g.gather_rows(g.parameter(*params.position), positions));
}

template <typename T>
EncoderOutput<T> encode(Graph<T>& g, const EncoderParams<T>& params, const TokenSequence& question) {
  const Var e = embed(g, params.embedding, question, 1);
  Var x = e;
  for (const auto& layer : params.layers) {
    const Var conv = g.conv1d(x, g.parameter(*layer.weight), g.parameter(*layer.bias),
                              numerics::centered_padding(params.kernel));
    x = g.add(g.glu(conv), x);
  }
  const Var z = g.add_row(g.matmul(x, g.parameter(*params.out_weight)), g.parameter(*params.out_bias));
  return {z, e, g.add(z, e)};
}

#define RAGE_INSTANTIATE_ENCODER(T)                                                                          \
  template EmbeddingParams<T> bind_embedding(numerics::ParameterSet<T>&, const ModelConfig&);                \
  template EncoderParams<T> bind_encoder(numerics::ParameterSet<T>&, const ModelConfig&);                    \
  template Var embed(Graph<T>&, const EmbeddingParams<T>&, const TokenSequence&, std::size_t);               \
  template EncoderOutput<T> encode(Graph<T>&, const EncoderParams<T>&, const TokenSequence&);

RAGE_INSTANTIATE_ENCODER(float)
RAGE_INSTANTIATE_ENCODER(double)
#undef RAGE_INSTANTIATE_ENCODER

}  // namespace rage::model
