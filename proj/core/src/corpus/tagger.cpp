#include "rage/corpus/tagger.hpp"

#include <algorithm>
#include <cctype>

#include "rage/corpus/synthetic.hpp"

namespace rage::corpus {

std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

LexiconTagger::LexiconTagger() : lexicon_(synthetic_lexicon()) {}

LexiconTagger::LexiconTagger(std::map<std::string, std::string, std::less<>> lexicon)
    : lexicon_(std::move(lexicon)) {}

std::string LexiconTagger::tag(std::string_view word) const {
  if (auto it = lexicon_.find(word); it != lexicon_.end()) return it->second;
  auto ends_with = [&](std::string_view suffix) {
    return word.size() > suffix.size() + 1 && word.substr(word.size() - suffix.size()) == suffix;
  };
  if (std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::ispunct(c); })) return ".";
  if (std::any_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); })) return "CD";
  if (ends_with("ly")) return "RB";
  if (ends_with("ing")) return "VBG";
  if (ends_with("ed")) return "VBD";
  if (ends_with("ous") || ends_with("ful") || ends_with("able") || ends_with("ive")) return "JJ";
  if (ends_with("s") && !ends_with("ss")) return "NNS";
  return "NN";
}

std::vector<TaggedToken> LexiconTagger::operator()(std::string_view text) const {
  std::vector<TaggedToken> out;
  for (auto& word : whitespace_tokenize(text)) {
    auto pos = tag(word);
    out.push_back({std::move(word), std::move(pos)});
  }
  return out;
}

Tagger default_tagger() {
  return [tagger = LexiconTagger()](std::string_view text) { return tagger(text); };
}

}  // namespace rage::corpus
