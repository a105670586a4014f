#include "rage/decoding/beam_search.hpp"

#include <algorithm>
#include <limits>

#include "rage/error.hpp"
#include "rage/numerics/parallel.hpp"

namespace rage::decoding {

using corpus::Vocabulary;

double Hypothesis::score(bool length_normalize) const {
  if (!length_normalize) return log_prob;
  const std::size_t count = tokens.size() + (finished ? 1 : 0);
  return count ? log_prob / static_cast<double>(count) : log_prob;
}

namespace {

void check_options(const BeamOptions& options) {
  if (options.beam == 0) throw Error(ErrorCode::kConfig, "beam width must be at least 1");
  if (options.max_len > model::kMaxSequence) {
    throw Error(ErrorCode::kConfig, "max_len may not exceed " + std::to_string(model::kMaxSequence));
  }
  if (std::find(options.suppressed.begin(), options.suppressed.end(), Vocabulary::kEnd) != options.suppressed.end()) {
    throw Error(ErrorCode::kConfig, "the END symbol cannot be suppressed");
  }
}

template <typename T>
struct Live {
  model::DecoderState<T> state;
  Hypothesis hyp;
};

struct Candidate {
  double log_prob;
  std::size_t source;
  std::size_t word;
};

// Higher log-probability first, then earlier source, then smaller id.
bool better(const Candidate& a, const Candidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.source != b.source) return a.source < b.source;
  return a.word < b.word;
}

}  // namespace

template <typename T>
std::vector<Hypothesis> beam_search(const model::Model<T>& model, const model::TokenSequence& question,
                                    const std::type_identity_t<numerics::Tensor<T>>* review, const BeamOptions& options) {
  check_options(options);
  const auto encoded = model.encode(question);
  const std::size_t vocab = model.config().vocab_size;
  std::vector<bool> allowed(vocab, true);
  for (auto id : options.suppressed) {
    if (id < vocab) allowed[id] = false;
  }

  std::vector<Live<T>> live;
  live.push_back({model.start(), {}});
  std::vector<Hypothesis> pool;
  const std::size_t d = model.config().dim;
  const std::size_t step_cost = model.config().decoder_layers * model.config().decoder_kernel * d * d * 4 + d * vocab;

  while (!live.empty()) {
    std::vector<numerics::Tensor<T>> rows(live.size());
    std::vector<char> forced(live.size());
    // Hypotheses expand independently; each owns its decoder state.
    numerics::parallel_for(numerics::Region::kHypotheses, 0, live.size(), live.size() * step_cost,
                           [&](std::size_t i) {
                             auto result = model.step(live[i].state, encoded, review);
                             forced[i] = result.must_end || live[i].hyp.tokens.size() >= options.max_len;
                             rows[i] = std::move(result.log_probs);
                           });

    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const double base = live[i].hyp.log_prob;
      if (forced[i]) {
        candidates.push_back({base + static_cast<double>(rows[i][Vocabulary::kEnd]), i, Vocabulary::kEnd});
        continue;
      }
      for (std::size_t w = 0; w < vocab; ++w) {
        if (allowed[w]) candidates.push_back({base + static_cast<double>(rows[i][w]), i, w});
      }
    }
    const std::size_t keep = std::min(options.beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      better);

    std::vector<Live<T>> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = candidates[c];
      Hypothesis hyp = live[cand.source].hyp;
      hyp.log_prob = cand.log_prob;
      if (cand.word == Vocabulary::kEnd) {
        hyp.finished = true;
        pool.push_back(std::move(hyp));
        continue;
      }
      hyp.tokens.push_back(cand.word);
      auto state = live[cand.source].state;
      model.push(state, cand.word);
      next.push_back({std::move(state), std::move(hyp)});
    }
    live = std::move(next);
  }

  std::stable_sort(pool.begin(), pool.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return a.score(options.length_normalize) > b.score(options.length_normalize);
  });
  return pool;
}

template <typename T>
Hypothesis greedy_decode(const model::Model<T>& model, const model::TokenSequence& question,
                         const std::type_identity_t<numerics::Tensor<T>>* review, const BeamOptions& options) {
  check_options(options);
  const auto encoded = model.encode(question);
  const std::size_t vocab = model.config().vocab_size;
  std::vector<bool> allowed(vocab, true);
  for (auto id : options.suppressed) {
    if (id < vocab) allowed[id] = false;
  }
  auto state = model.start();
  Hypothesis hyp;
  while (true) {
    const auto result = model.step(state, encoded, review);
    std::size_t best = Vocabulary::kEnd;
    if (!result.must_end && hyp.tokens.size() < options.max_len) {
      T best_value = -std::numeric_limits<T>::infinity();
      for (std::size_t w = 0; w < vocab; ++w) {
        if (allowed[w] && result.log_probs[w] > best_value) {
          best_value = result.log_probs[w];
          best = w;
        }
      }
    }
    hyp.log_prob += static_cast<double>(result.log_probs[best]);
    if (best == Vocabulary::kEnd) {
      hyp.finished = true;
      return hyp;
    }
    hyp.tokens.push_back(best);
    model.push(state, best);
  }
}

template std::vector<Hypothesis> beam_search(const model::Model<float>&, const model::TokenSequence&,
                                             const numerics::Tensor<float>*, const BeamOptions&);
template std::vector<Hypothesis> beam_search(const model::Model<double>&, const model::TokenSequence&,
                                             const numerics::Tensor<double>*, const BeamOptions&);
template Hypothesis greedy_decode(const model::Model<float>&, const model::TokenSequence&,
                                  const numerics::Tensor<float>*, const BeamOptions&);
template Hypothesis greedy_decode(const model::Model<double>&, const model::TokenSequence&,
                                  const numerics::Tensor<double>*, const BeamOptions&);

}  // namespace rage::decoding
