#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rage/corpus/types.hpp"

namespace rage::corpus {

// Tokenizes and tags one text. Real taggers plug in behind this signature.
using Tagger = std::function<std::vector<TaggedToken>(std::string_view)>;

// Whitespace tokenizer (lower-cased) with a lexicon lookup and suffix
// heuristics for words missing from the lexicon.
class LexiconTagger {
 public:
  LexiconTagger();
  explicit LexiconTagger(std::map<std::string, std::string, std::less<>> lexicon);

  std::vector<TaggedToken> operator()(std::string_view text) const;
  std::string tag(std::string_view word) const;

  void add(std::string word, std::string tag) { lexicon_[std::move(word)] = std::move(tag); }

 private:
  std::map<std::string, std::string, std::less<>> lexicon_;
};

std::vector<std::string> whitespace_tokenize(std::string_view text);

Tagger default_tagger();

}  // namespace rage::corpus
