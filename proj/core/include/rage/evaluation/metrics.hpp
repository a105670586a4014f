#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rage/corpus/embeddings.hpp"

namespace rage::evaluation {

/// Distinct n-grams over total n-grams. Answers with fewer than n tokens
/// score 0. Throws kUndefinedMetric for an empty answer or n = 0.
double distinct_n(std::span<const std::string> tokens, std::size_t n);

/// Cosine between the mean embeddings of the two sides; out-of-vocabulary
/// words use the UNK vector. Throws kUndefinedMetric when a side is empty,
/// has no in-vocabulary word, or averages to the zero vector.
double embedding_similarity(std::span<const std::string> generated, std::span<const std::string> reference,
                            const corpus::EmbeddingLookup& vectors);

struct AnswerRecord {
  std::string pair_id;
  std::vector<std::string> tokens;
};

struct Reference {
  std::string pair_id;
  std::vector<std::string> tokens;
};

struct ItemResult {
  std::string pair_id;
  std::vector<std::string> answer;
  std::vector<std::string> reference;
  std::optional<double> distinct_1;
  std::optional<double> distinct_2;
  std::optional<double> es;
  std::string error;  // empty when every metric is defined
};

struct EvalReport {
  double distinct_1 = 0.0;
  double distinct_2 = 0.0;
  double es = 0.0;
  std::size_t evaluated = 0;  // items with all three metrics
  std::size_t failed = 0;
  std::vector<ItemResult> items;  // reference order
};

/// Scores the answer for every reference. Missing or undefined items are
/// reported with an error and left out of the means, which are plain
/// arithmetic means of the per-item values.
EvalReport evaluate(std::span<const AnswerRecord> answers, std::span<const Reference> references,
                    const corpus::EmbeddingLookup& vectors);

// JSONL, one {"pair_id", "answer_tokens"} object per line.
void write_answers(const std::filesystem::path& path, std::span<const AnswerRecord> answers);
std::vector<AnswerRecord> read_answers(const std::filesystem::path& path);

// {"distinct_1", "distinct_2", "es", "evaluated", "failed", "items": [...]}
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace rage::evaluation
