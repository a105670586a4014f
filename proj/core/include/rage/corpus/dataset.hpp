#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "rage/corpus/tagger.hpp"
#include "rage/corpus/types.hpp"

namespace rage::corpus {

/// Tokenizes and tags every record, then in order: drops reviews shorter than
/// kMinReviewTokens, drops QA pairs whose question or answer falls outside
/// [kMinQaTokens, kMaxQaTokens], and keeps only the longest answer for each
/// (product, question). Pair and review ids are assigned in output order.
/// Throws kEmptyDataset when no QA pair survives.
Dataset preprocess(const RawCorpus& raw, const Tagger& tagger);

// Inverse of tokenization: joins tokens with single spaces.
RawCorpus to_raw(const Dataset& dataset);

// Moves `count` seeded-random training pairs to the validation split when
// the dataset has none. Returns the number moved.
std::size_t assign_validation(Dataset& dataset, std::size_t count, std::uint64_t seed);

// Corpus files: one JSON object per line. QA records carry "product_id",
// "question", "answer" and optional "split"; review records carry
// "product_id" and "text". Errors name the offending line.
RawCorpus read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const RawCorpus& raw);

// Preprocessed dataset (tokens with tags), one JSON object per line.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

inline constexpr std::string_view kUnknownTag = "<unk>";

// Tag counts per word over the training collection (training QA pairs and all
// reviews).
class PosStatistics {
 public:
  PosStatistics() = default;
  explicit PosStatistics(const Dataset& dataset);

  void add(const std::vector<TaggedToken>& tokens);
  // Most frequent tag; ties go to the lexicographically smallest tag; unseen
  // words get kUnknownTag.
  std::string dominating(std::string_view word) const;

 private:
  std::map<std::string, std::map<std::string, std::size_t>, std::less<>> counts_;
};

std::string dominating_pos(std::string_view word, const Dataset& dataset);

}  // namespace rage::corpus
