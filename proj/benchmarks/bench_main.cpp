#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "rage/corpus/embeddings.hpp"
#include "rage/corpus/vocabulary.hpp"
#include "rage/decoding/beam_search.hpp"
#include "rage/model/model.hpp"
#include "rage/numerics/kernels.hpp"
#include "rage/retrieval/wmd.hpp"
#include "rage/training/trainer.hpp"

using namespace rage;

namespace {

constexpr std::size_t kVocab = 2000;

corpus::EmbeddingTable random_table(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  corpus::EmbeddingTable t{corpus::EmbeddingKind::kWord, rows, dim, std::vector<double>(rows * dim), false};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (auto& v : t.values) v = normal(rng);
  return t;
}

model::Model<float> make_model(std::size_t dim) {
  model::ModelConfig c;
  c.dim = dim;
  c.vocab_size = kVocab;
  c.tag_count = 16;
  std::vector<std::size_t> tags(kVocab);
  for (std::size_t w = 0; w < kVocab; ++w) tags[w] = w % 16;
  return model::Model<float>::create(c, random_table(kVocab, dim, 1), tags, 1);
}

model::TokenSequence tokens(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  model::TokenSequence t;
  for (std::size_t i = 0; i < n; ++i) {
    t.words.push_back(corpus::Vocabulary::kReservedWords + rng() % (kVocab - corpus::Vocabulary::kReservedWords));
    t.tags.push_back(rng() % 16);
  }
  return t;
}

numerics::Tensor<float> memory(std::size_t rows, std::size_t dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<float> normal(0.0f, 0.3f);
  auto t = numerics::Tensor<float>::matrix(rows, dim);
  for (auto& v : t.values()) v = normal(rng);
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 128, k = 4;
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal(0.0f, 0.1f);
  numerics::Tensor<float> seq({length, d}), kernel({k * d, 2 * d}), bias({1, 2 * d});
  for (auto& v : seq.values()) v = normal(rng);
  for (auto& v : kernel.values()) v = normal(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(numerics::conv1d_window(seq, kernel, bias, numerics::causal_padding(k)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(length));
}
BENCHMARK(BM_ConvForward)->Arg(10)->Arg(40);

void BM_Wmd(benchmark::State& state) {
  const auto words = static_cast<std::size_t>(state.range(0));
  corpus::Vocabulary vocab;
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < 2 * words; ++i) vocab.add_word("w" + std::to_string(i));
  for (std::size_t i = 0; i < words; ++i) {
    a.push_back("w" + std::to_string(i));
    b.push_back("w" + std::to_string(words + i));
  }
  const auto table = random_table(vocab.size(), 300, 5);
  const corpus::EmbeddingLookup lookup(vocab, table);
  const retrieval::VectorLookup vectors = [&](std::string_view w) { return lookup(w); };
  for (auto _ : state) benchmark::DoNotOptimize(retrieval::wmd(a, b, vectors));
}
BENCHMARK(BM_Wmd)->Arg(10)->Arg(20)->Arg(40);

// Teacher-forced pass over a whole answer versus decoding it step by step.
void BM_FullForward(benchmark::State& state) {
  const auto m = make_model(64);
  const auto question = tokens(15, 1);
  const auto answer = tokens(static_cast<std::size_t>(state.range(0)), 2).words;
  const auto mem = memory(30, 64);
  for (auto _ : state) benchmark::DoNotOptimize(m.log_probs(question, answer, &mem));
}
BENCHMARK(BM_FullForward)->Arg(10)->Arg(40);

void BM_StepwiseDecode(benchmark::State& state) {
  const auto m = make_model(64);
  const auto question = tokens(15, 1);
  const auto answer = tokens(static_cast<std::size_t>(state.range(0)), 2).words;
  const auto mem = memory(30, 64);
  for (auto _ : state) {
    const auto encoded = m.encode(question);
    auto s = m.start();
    for (std::size_t j = 0; j <= answer.size(); ++j) {
      benchmark::DoNotOptimize(m.step(s, encoded, &mem));
      if (j < answer.size()) m.push(s, answer[j]);
    }
  }
}
BENCHMARK(BM_StepwiseDecode)->Arg(10)->Arg(40);

void BM_BeamSearch(benchmark::State& state) {
  const auto m = make_model(64);
  const auto question = tokens(15, 1);
  const auto mem = memory(30, 64);
  decoding::BeamOptions options;
  options.beam = static_cast<std::size_t>(state.range(0));
  options.max_len = 20;
  for (auto _ : state) benchmark::DoNotOptimize(decoding::beam_search(m, question, &mem, options));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(5);

void BM_TrainingBatch(benchmark::State& state) {
  auto m = make_model(64);
  std::vector<model::Example<float>> examples;
  for (std::size_t i = 0; i < 16; ++i) {
    model::Example<float> ex;
    ex.question = tokens(12, 10 + i);
    ex.answer = tokens(15, 50 + i).words;
    ex.review = memory(30, 64);
    examples.push_back(std::move(ex));
  }
  std::vector<const model::Example<float>*> batch;
  for (const auto& e : examples) batch.push_back(&e);
  for (auto _ : state) {
    m.params().zero_grads();
    benchmark::DoNotOptimize(training::batch_loss<float>(m, batch, 0.001));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_TrainingBatch);

}  // namespace

BENCHMARK_MAIN();
