#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rage/corpus/types.hpp"

namespace rage::corpus {

// Bijective word<->id and tag<->id maps with reserved ids that never move.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kStart = 1;
  static constexpr std::size_t kEnd = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kReservedWords = 4;

  static constexpr std::size_t kPadTag = 0;
  static constexpr std::size_t kUnkTag = 1;
  static constexpr std::size_t kStartTag = 2;
  static constexpr std::size_t kReservedTags = 3;

  Vocabulary();

  // Words from training/validation QA pairs and all reviews seen at least
  // `min_frequency` times; tags from every token in the dataset.
  static Vocabulary build(const Dataset& dataset, std::size_t min_frequency = 1);

  std::size_t add_word(const std::string& word);
  std::size_t add_tag(const std::string& tag);

  std::size_t size() const noexcept { return words_.size(); }
  std::size_t tag_count() const noexcept { return tags_.size(); }

  bool contains(std::string_view word) const;
  std::size_t word_id(std::string_view word) const;  // kUnk when absent
  std::size_t tag_id(std::string_view tag) const;    // kUnkTag when absent
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const std::string& tag(std::size_t id) const { return tags_.at(id); }

  std::vector<std::size_t> encode(const std::vector<std::string>& words) const;
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<std::string>& tags() const noexcept { return tags_; }

  // FNV-1a over the ordered word and tag lists.
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> word_ids_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> tag_ids_;
};

}  // namespace rage::corpus
