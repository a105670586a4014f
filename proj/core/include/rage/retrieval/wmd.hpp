#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rage::retrieval {

// Word -> embedding. Unseen words must map to some fixed (UNK) vector.
using VectorLookup = std::function<std::span<const double>(std::string_view)>;

// Normalized bag of words as integer counts over sorted distinct words.
struct BagOfWords {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

BagOfWords bag_of_words(std::span<const std::string> tokens);

double euclidean(std::span<const double> a, std::span<const double> b);

/// Word Mover's Distance: exact optimal-transport cost between the normalized
/// bags of words of `a` and `b`, with Euclidean distance between embeddings as
/// the ground cost. Throws kUndefinedDistance when either document is empty.
double wmd(std::span<const std::string> a, std::span<const std::string> b, const VectorLookup& vectors);
double wmd(const BagOfWords& a, const BagOfWords& b, const VectorLookup& vectors);

}  // namespace rage::retrieval
