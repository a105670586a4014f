#include "rage/model/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rage/error.hpp"

namespace rage::model {

using corpus::Vocabulary;
using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

std::vector<std::size_t> decoder_tag_table(const Vocabulary& vocab, const corpus::PosStatistics& stats) {
  std::vector<std::size_t> table(vocab.size(), Vocabulary::kUnkTag);
  table[Vocabulary::kPad] = Vocabulary::kPadTag;
  table[Vocabulary::kStart] = Vocabulary::kStartTag;
  for (std::size_t id = Vocabulary::kReservedWords; id < vocab.size(); ++id) {
    table[id] = vocab.tag_id(stats.dominating(vocab.word(id)));
  }
  return table;
}

namespace {

template <typename T>
Tensor<T> normal_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor<T> out = Tensor<T>::matrix(rows, cols);
  for (auto& v : out.values()) v = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
void add_linear(numerics::ParameterSet<T>& params, std::mt19937_64& rng, const std::string& name, std::size_t in,
                std::size_t out) {
  params.add(name + ".weight", normal_matrix<T>(rng, in, out, 1.0 / std::sqrt(static_cast<double>(in))));
  params.add(name + ".bias", Tensor<T>::matrix(1, out));
}

}  // namespace

template <typename T>
Model<T> Model<T>::create(const ModelConfig& config, const corpus::EmbeddingTable& words,
                          std::vector<std::size_t> decoder_tags, std::uint64_t seed) {
  config.validate();
  if (words.rows != config.vocab_size || words.dim != config.dim) {
    throw Error(ErrorCode::kConfig, "word table is " + std::to_string(words.rows) + "x" + std::to_string(words.dim) +
                                        ", model expects " + std::to_string(config.vocab_size) + "x" +
                                        std::to_string(config.dim));
  }
  const std::size_t d = config.dim;
  std::mt19937_64 rng(seed);
  numerics::ParameterSet<T> params;
  params.add("embed.word",
             Tensor<T>({words.rows, words.dim}, std::vector<T>(words.values.begin(), words.values.end())), false);
  const double embed_scale = 0.5 / std::sqrt(static_cast<double>(d));
  if (config.use_pos) params.add("embed.pos", normal_matrix<T>(rng, config.tag_count, d, embed_scale));
  params.add("embed.position", normal_matrix<T>(rng, kMaxSequence + 1, d, embed_scale));

  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    add_linear(params, rng, "enc.conv" + std::to_string(l), config.encoder_kernel * d, 2 * d);
  }
  add_linear(params, rng, "enc.out", d, d);
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    const std::string id = std::to_string(l);
    add_linear(params, rng, "dec.conv" + id, config.decoder_kernel * d, 2 * d);
    add_linear(params, rng, "dec.att" + id, d, d);
    if (config.use_review) {
      add_linear(params, rng, "dec.gate" + id + ".hidden", 3 * d, d);
      add_linear(params, rng, "dec.gate" + id + ".out", d, 1);
    }
  }
  add_linear(params, rng, "dec.out", d, config.vocab_size);
  return Model(config, std::move(params), std::move(decoder_tags));
}

template <typename T>
Model<T>::Model(ModelConfig config, numerics::ParameterSet<T> params, std::vector<std::size_t> decoder_tags)
    : config_(std::move(config)), params_(std::move(params)), decoder_tags_(std::move(decoder_tags)) {
  config_.validate();
  if (decoder_tags_.size() != config_.vocab_size) {
    throw Error(ErrorCode::kConfig, "decoder tag table has " + std::to_string(decoder_tags_.size()) +
                                        " entries for a vocabulary of " + std::to_string(config_.vocab_size));
  }
  bind();
}

template <typename T>
void Model<T>::bind() {
  auto expect = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    const auto& t = params_.at(name).tensor;
    if (t.rank() != 2 || t.rows() != rows || t.cols() != cols) {
      throw Error(ErrorCode::kInvalidShape, name + " has shape " + numerics::shape_string(t.shape()) +
                                                ", expected [" + std::to_string(rows) + "," + std::to_string(cols) +
                                                "]");
    }
  };
  const std::size_t d = config_.dim;
  expect("embed.word", config_.vocab_size, d);
  if (config_.use_pos) expect("embed.pos", config_.tag_count, d);
  expect("embed.position", kMaxSequence + 1, d);
  expect("dec.out.weight", d, config_.vocab_size);
  encoder_ = bind_encoder(params_, config_);
  generator_ = bind_generator(params_, config_);
  for (const auto& layer : encoder_.layers) expect(layer.weight->name, config_.encoder_kernel * d, 2 * d);
  for (const auto& layer : generator_.layers) expect(layer.conv.weight->name, config_.decoder_kernel * d, 2 * d);
}

template <typename T>
std::size_t Model<T>::decoder_tag(std::size_t word) const {
  if (word >= decoder_tags_.size()) throw Error(ErrorCode::kContractViolation, "word id out of range");
  return decoder_tags_[word];
}

template <typename T>
TokenSequence Model<T>::decoder_inputs(const std::vector<std::size_t>& answer) const {
  TokenSequence out;
  out.words.reserve(answer.size() + 1);
  out.words.push_back(Vocabulary::kStart);
  out.words.insert(out.words.end(), answer.begin(), answer.end());
  for (auto w : out.words) out.tags.push_back(decoder_tag(w));
  return out;
}

template <typename T>
std::optional<Tensor<T>> Model<T>::review_memory(const retrieval::WeightedSnippetVocab& vocab) const {
  if (vocab.empty()) return std::nullopt;
  if (vocab.dim != config_.dim) throw Error(ErrorCode::kInvalidShape, "snippet embeddings have the wrong width");
  return Tensor<T>({vocab.size(), vocab.dim}, std::vector<T>(vocab.magnified.begin(), vocab.magnified.end()));
}

template <typename T>
Var Model<T>::forward(Graph<T>& g, const TokenSequence& question, const std::vector<std::size_t>& answer,
                      const Tensor<T>* review) const {
  if (answer.size() > kMaxSequence) {
    throw Error(ErrorCode::kLength, "answer of " + std::to_string(answer.size()) + " tokens exceeds " +
                                        std::to_string(kMaxSequence));
  }
  const auto encoded = model::encode(g, encoder_, question);
  std::optional<Var> memory;
  if (review) memory = g.reference(*review);
  return forward_train(g, generator_, encoded, decoder_inputs(answer), memory);
}

template <typename T>
EncodedQuestion<T> Model<T>::encode(const TokenSequence& question) const {
  Graph<T> g(false);
  const auto out = model::encode(g, encoder_, question);
  return {g.value(out.z), g.value(out.e), g.value(out.attended)};
}

template <typename T>
DecoderState<T> Model<T>::start() const {
  DecoderState<T> state;
  state.layer_inputs.resize(config_.decoder_layers);
  push(state, Vocabulary::kStart);
  return state;
}

template <typename T>
void Model<T>::push(DecoderState<T>& state, std::size_t word) const {
  state.words.push_back(word);
  state.tags.push_back(decoder_tag(word));
}

template <typename T>
StepResult<T> Model<T>::step(DecoderState<T>& state, const EncodedQuestion<T>& question,
                             const Tensor<T>* review) const {
  if (state.pending() != 1) {
    throw Error(ErrorCode::kContractViolation, "decoder state must hold exactly one unprocessed token");
  }
  const std::size_t j = state.processed;
  const std::size_t d = config_.dim;
  const std::size_t k = config_.decoder_kernel;

  Graph<T> g(false);
  const EncoderOutput<T> encoded{g.reference(question.z), g.reference(question.e), g.reference(question.attended)};
  std::optional<Var> memory;
  if (review) memory = g.reference(*review);

  const TokenSequence token{{state.words[j]}, {state.tags[j]}};
  const Var embedded = embed(g, generator_.embedding, token, j);
  Var x = embedded;
  for (std::size_t l = 0; l < generator_.layers.size(); ++l) {
    auto& rows = state.layer_inputs[l];
    const auto& current = g.value(x);
    rows.insert(rows.end(), current.values().begin(), current.values().end());
    // The k most recent layer inputs, zero rows standing in for positions
    // before the start symbol, exactly as the causal padding does.
    Tensor<T> window = Tensor<T>::matrix(k, d);
    for (std::size_t w = 0; w < k; ++w) {
      if (j + w + 1 < k) continue;
      const std::size_t src = j + w + 1 - k;
      std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(src * d), d, window.row(w).begin());
    }
    x = decoder_layer(g, generator_.layers[l], g.constant(std::move(window)), numerics::Padding{0, 0}, x, embedded,
                      encoded, memory);
  }
  const Var logits =
      g.add_row(g.matmul(x, g.parameter(*generator_.out_weight)), g.parameter(*generator_.out_bias));
  state.processed = j + 1;
  return {g.value(g.log_softmax_rows(logits)), j + 1 >= generator_.embedding.position->tensor.rows()};
}

template <typename T>
Tensor<T> Model<T>::log_probs(const TokenSequence& question, const std::vector<std::size_t>& answer,
                              const Tensor<T>* review) const {
  Graph<T> g(false);
  return g.value(forward(g, question, answer, review));
}

template class Model<float>;
template class Model<double>;

}  // namespace rage::model
