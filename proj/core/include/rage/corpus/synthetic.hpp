#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rage/corpus/types.hpp"

namespace rage::corpus {

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t n_products = 10;
  // Total QA pairs across all products.
  std::size_t n_pairs = 50;
  // Reviews per product; at least two are always written so every asked
  // aspect is covered by two reviews.
  std::size_t n_reviews = 6;
  // The last `test_products` products are held out and their pairs labelled
  // test; their facts appear only in their own reviews.
  std::size_t test_products = 0;
  // Number of non-test pairs labelled validation.
  std::size_t validation_pairs = 0;
};

struct SynthFact {
  std::string aspect;
  std::string polarity;
};

struct SynthProduct {
  std::string product_id;
  std::vector<SynthFact> facts;  // one per aspect, in aspect order
};

struct SynthCorpus {
  RawCorpus raw;
  std::vector<SynthProduct> products;
  // Parallel to raw.qa: which aspect each pair asks about.
  std::vector<std::string> pair_aspects;
};

// Deterministic templated corpus. Each product fixes a polarity per aspect;
// questions ask about aspects, answers and reviews verbalize the facts, and
// reviews mix fact clauses with unrelated filler clauses.
SynthCorpus synth_corpus(const SynthOptions& options);

const std::vector<std::string>& synthetic_aspects();
const std::vector<std::string>& synthetic_polarities(const std::string& aspect);

// Tags for every word the generator can emit.
const std::map<std::string, std::string, std::less<>>& synthetic_lexicon();

}  // namespace rage::corpus
