#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rage::corpus {

// Hard length limits applied at preprocessing time.
inline constexpr std::size_t kMinQaTokens = 4;
inline constexpr std::size_t kMaxQaTokens = 40;
inline constexpr std::size_t kMinReviewTokens = 10;

struct TaggedToken {
  std::string word;
  std::string pos;

  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

enum class Split { kTrain, kValidation, kTest };

std::string_view split_name(Split split);
// Accepts "train", "validation"/"valid"/"dev", "test".
Split parse_split(std::string_view name);

struct QAPair {
  std::string pair_id;
  std::string product_id;
  std::vector<TaggedToken> question;
  std::vector<TaggedToken> answer;
  Split split = Split::kTrain;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

struct Review {
  std::string review_id;
  std::string product_id;
  std::vector<TaggedToken> tokens;

  friend bool operator==(const Review&, const Review&) = default;
};

struct Dataset {
  std::vector<QAPair> pairs;
  std::vector<Review> reviews;

  std::size_t count(Split split) const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Untokenized records as they appear in corpus files.
struct RawQA {
  std::string product_id;
  std::string question;
  std::string answer;
  std::string split = "train";
};

struct RawReview {
  std::string product_id;
  std::string text;
};

struct RawCorpus {
  std::vector<RawQA> qa;
  std::vector<RawReview> reviews;
};

std::vector<std::string> words_of(const std::vector<TaggedToken>& tokens);

}  // namespace rage::corpus
