#pragma once

#include <cstddef>
#include <type_traits>
#include <vector>

#include "rage/corpus/vocabulary.hpp"
#include "rage/model/model.hpp"

namespace rage::decoding {

struct BeamOptions {
  std::size_t beam = 5;
  std::size_t max_len = model::kMaxSequence;  // answer tokens before the forced END
  bool length_normalize = true;               // final ranking only
  // Word ids never generated.
  std::vector<std::size_t> suppressed{corpus::Vocabulary::kPad, corpus::Vocabulary::kStart, corpus::Vocabulary::kUnk};
};

struct Hypothesis {
  std::vector<std::size_t> tokens;  // y_1..y_j, without START and END
  double log_prob = 0.0;            // summed step log-probabilities, END included
  bool finished = false;

  // Ranking score: log_prob, or log_prob per predicted token (END counts).
  double score(bool length_normalize) const;
};

/// Beam search over Model::step. Every live hypothesis is expanded by every
/// non-suppressed word and the `beam` best by raw log-probability survive;
/// ties go to the earlier hypothesis, then the smaller word id. Expansions
/// ending in END move to the completed pool. A hypothesis holding max_len
/// tokens can only be extended by END, so every result is finished.
/// Returns the pool best first.
template <typename T>
std::vector<Hypothesis> beam_search(const model::Model<T>& model, const model::TokenSequence& question,
                                    const std::type_identity_t<numerics::Tensor<T>>* review, const BeamOptions& options);

// Greedy argmax decoding under the same suppression and length rules.
template <typename T>
Hypothesis greedy_decode(const model::Model<T>& model, const model::TokenSequence& question,
                         const std::type_identity_t<numerics::Tensor<T>>* review, const BeamOptions& options);

}  // namespace rage::decoding
