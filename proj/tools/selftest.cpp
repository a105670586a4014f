#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "rage/corpus/embeddings.hpp"
#include "rage/decoding/beam_search.hpp"
#include "rage/error.hpp"
#include "rage/evaluation/metrics.hpp"
#include "rage/model/model.hpp"
#include "rage/numerics/gradcheck.hpp"
#include "rage/numerics/kernels.hpp"
#include "rage/retrieval/snippets.hpp"
#include "rage/retrieval/wmd.hpp"
#include "rage/training/optimizer.hpp"

namespace rage::cli {

namespace {

using numerics::Tensor;

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Small model with random word vectors, used by the model-level checks.
template <typename T>
model::Model<T> tiny_model(std::uint64_t seed, bool use_review = true) {
  model::ModelConfig c;
  c.dim = 8;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.vocab_size = 20;
  c.tag_count = 5;
  c.use_review = use_review;
  corpus::EmbeddingTable table;
  table.rows = c.vocab_size;
  table.dim = c.dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (std::size_t i = 0; i < table.rows * table.dim; ++i) table.values.push_back(normal(rng));
  std::vector<std::size_t> tags(c.vocab_size);
  for (std::size_t w = 0; w < tags.size(); ++w) tags[w] = w % c.tag_count;
  return model::Model<T>::create(c, table, tags, seed + 1);
}

template <typename T>
Tensor<T> random_memory(std::uint64_t seed, std::size_t rows, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  Tensor<T> out = Tensor<T>::matrix(rows, dim);
  for (auto& v : out.values()) v = static_cast<T>(normal(rng));
  return out;
}

const model::TokenSequence kQuestion{{5, 9, 11, 7}, {1, 3, 4, 2}};

Check glu_check() {
  const auto out = numerics::glu(Tensor<double>({1, 4}, {2.0, -1.0, std::log(3.0), std::log(3.0)}));
  return {"glu(a, ln 3) = 3a/4", near(out[0], 1.5, 1e-12) && near(out[1], -0.75, 1e-12), ""};
}

Check softmax_check() {
  const auto out = numerics::softmax(Tensor<double>({1, 3}, {0.0, std::log(2.0), std::log(3.0)}));
  return {"softmax(ln 1, ln 2, ln 3)",
          near(out[0], 1.0 / 6, 1e-12) && near(out[1], 2.0 / 6, 1e-12) && near(out[2], 3.0 / 6, 1e-12), ""};
}

Check conv_check() {
  const auto out = numerics::conv1d_window(Tensor<double>({3, 1}, {1, 2, 3}), Tensor<double>({2, 1}, {1, 1}),
                                           Tensor<double>({1, 1}, {0}), numerics::Padding{1, 0});
  return {"conv1d running pair sums", out.values().size() == 3 && out[0] == 1 && out[1] == 3 && out[2] == 5, ""};
}

Check gradient_check() {
  auto m = tiny_model<double>(11);
  const auto memory = random_memory<double>(12, 5, 8);
  const std::vector<std::size_t> answer{4, 8, 13};
  const auto report = numerics::check_gradients(m.params(), [&](numerics::Graph<double>& g) {
    const auto log_probs = m.forward(g, kQuestion, answer, &memory);
    std::vector<std::size_t> targets(answer);
    targets.push_back(corpus::Vocabulary::kEnd);
    return g.nll(log_probs, targets);
  });
  return {"full model finite-difference gradients", report.max_error < 1e-4,
          "max relative error " + fmt(report.max_error) + " over " + std::to_string(report.checked) + " entries"};
}

Check step_check() {
  const auto m = tiny_model<double>(21);
  const auto memory = random_memory<double>(22, 4, 8);
  const std::vector<std::size_t> answer{6, 14, 9, 17, 4};
  const auto full = m.log_probs(kQuestion, answer, &memory);
  const auto encoded = m.encode(kQuestion);
  auto state = m.start();
  bool same = true;
  for (std::size_t j = 0; j <= answer.size(); ++j) {
    const auto row = m.step(state, encoded, &memory).log_probs;
    for (std::size_t w = 0; w < row.size(); ++w) same = same && row[w] == full(j, w);
    if (j < answer.size()) m.push(state, answer[j]);
  }
  return {"incremental step equals full recomputation", same, ""};
}

Check beam_check() {
  const auto m = tiny_model<double>(31);
  const auto memory = random_memory<double>(32, 3, 8);
  decoding::BeamOptions options;
  options.beam = 1;
  options.max_len = 8;
  const auto beam = decoding::beam_search(m, kQuestion, &memory, options).front();
  const auto greedy = decoding::greedy_decode(m, kQuestion, &memory, options);
  return {"beam width 1 equals greedy", beam.tokens == greedy.tokens && beam.log_prob == greedy.log_prob, ""};
}

Check wmd_check() {
  std::map<std::string, std::vector<double>> vectors{{"a", {0, 0}}, {"b", {3, 4}}, {"c", {6, 8}}};
  const retrieval::VectorLookup lookup = [&](std::string_view w) {
    return std::span<const double>(vectors.at(std::string(w)));
  };
  const std::vector<std::string> d1{"a", "b"}, d2{"c", "c"}, d3{"b", "a"};
  const double forward = retrieval::wmd(d1, d2, lookup);
  const double backward = retrieval::wmd(d2, d1, lookup);
  // Half the mass travels 10, half travels 5.
  return {"word mover's distance", near(forward, 7.5, 1e-12) && forward == backward &&
                                       retrieval::wmd(d1, d3, lookup) == 0.0,
          "wmd = " + fmt(forward)};
}

Check nesterov_check() {
  std::vector<double> theta{1.0}, velocity{0.0};
  for (int i = 0; i < 2; ++i) {
    const std::vector<double> grad{theta[0]};
    training::nesterov_update<double>(theta, grad, velocity, 0.1, 0.9);
  }
  return {"Nesterov recurrence on 0.5 theta^2", near(theta[0], 0.5751, 1e-12), "theta_2 = " + fmt(theta[0])};
}

Check metric_check() {
  const std::vector<std::string> answer{"ok", "ok", "good"};
  corpus::Vocabulary vocab;
  vocab.add_word("ok");
  vocab.add_word("good");
  const auto table = corpus::seeded_word_table(vocab, 16, 3);
  const corpus::EmbeddingLookup lookup(vocab, table);
  const double d1 = evaluation::distinct_n(answer, 1);
  const double es = evaluation::embedding_similarity(answer, answer, lookup);
  return {"distinct-1 and self similarity", near(d1, 2.0 / 3, 1e-15) && near(es, 1.0, 1e-9), ""};
}

Check pi_check() {
  std::vector<double> scores;
  for (int i = 12; i >= 1; --i) scores.push_back(i);
  const std::vector<std::vector<double>> pairs{scores};
  const double pi = retrieval::calibrate_pi(pairs);
  return {"relevance threshold from top-10 snippets", pi == 5.5, "pi = " + fmt(pi)};
}

}  // namespace

std::vector<Check> selftest() {
  std::vector<Check (*)()> checks{glu_check,  softmax_check, conv_check,     gradient_check, step_check,
                                  beam_check, wmd_check,     nesterov_check, metric_check,   pi_check};
  std::vector<Check> out;
  for (auto* check : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

}  // namespace rage::cli
