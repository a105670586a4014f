#include "rage/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "rage/corpus/dataset.hpp"
#include "rage/error.hpp"

namespace rage::corpus {

Vocabulary::Vocabulary() {
  for (const char* w : {"<pad>", "<s>", "</s>", "<unk>"}) add_word(w);
  for (const char* t : {"<pad>", "<unk>", "<s>"}) add_tag(t);
}

std::size_t Vocabulary::add_word(const std::string& word) {
  if (auto it = word_ids_.find(word); it != word_ids_.end()) return it->second;
  word_ids_.emplace(word, words_.size());
  words_.push_back(word);
  return words_.size() - 1;
}

std::size_t Vocabulary::add_tag(const std::string& tag) {
  if (auto it = tag_ids_.find(tag); it != tag_ids_.end()) return it->second;
  tag_ids_.emplace(tag, tags_.size());
  tags_.push_back(tag);
  return tags_.size() - 1;
}

Vocabulary Vocabulary::build(const Dataset& dataset, std::size_t min_frequency) {
  std::map<std::string, std::size_t> counts;
  std::set<std::string> tags;
  auto visit = [&](const std::vector<TaggedToken>& tokens, bool count_words) {
    for (const auto& t : tokens) {
      if (count_words) ++counts[t.word];
      tags.insert(t.pos);
    }
  };
  for (const auto& p : dataset.pairs) {
    const bool seen = p.split != Split::kTest;
    visit(p.question, seen);
    visit(p.answer, seen);
  }
  for (const auto& r : dataset.reviews) visit(r.tokens, true);

  Vocabulary vocab;
  for (const auto& [word, count] : counts) {
    if (count >= min_frequency) vocab.add_word(word);
  }
  for (const auto& tag : tags) vocab.add_tag(tag);
  return vocab;
}

bool Vocabulary::contains(std::string_view word) const { return word_ids_.contains(std::string(word)); }

std::size_t Vocabulary::word_id(std::string_view word) const {
  auto it = word_ids_.find(std::string(word));
  return it == word_ids_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::tag_id(std::string_view tag) const {
  auto it = tag_ids_.find(std::string(tag));
  return it == tag_ids_.end() ? kUnkTag : it->second;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<std::size_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(word_id(w));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(word(id));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& w : words_) mix(w);
  mix("\x1e");
  for (const auto& t : tags_) mix(t);
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << nlohmann::json{{"words", words_}, {"tags", tags_}}.dump(1) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json obj;
  try {
    in >> obj;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  Vocabulary vocab;
  try {
    const auto words = obj.at("words").get<std::vector<std::string>>();
    const auto tags = obj.at("tags").get<std::vector<std::string>>();
    Vocabulary fresh;
    for (std::size_t i = 0; i < std::min(words.size(), kReservedWords); ++i) {
      if (words[i] != fresh.words_[i]) throw Error(ErrorCode::kFormat, path.string() + ": reserved word ids moved");
    }
    for (std::size_t i = 0; i < std::min(tags.size(), kReservedTags); ++i) {
      if (tags[i] != fresh.tags_[i]) throw Error(ErrorCode::kFormat, path.string() + ": reserved tag ids moved");
    }
    for (const auto& w : words) vocab.add_word(w);
    for (const auto& t : tags) vocab.add_tag(t);
    if (vocab.size() != words.size() || vocab.tag_count() != tags.size()) {
      throw Error(ErrorCode::kFormat, path.string() + ": duplicate vocabulary entries");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  return vocab;
}

}  // namespace rage::corpus
