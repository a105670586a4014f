#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rage/corpus/vocabulary.hpp"

namespace rage::corpus {

enum class EmbeddingKind { kWord, kPos, kPosition };

struct EmbeddingTable {
  EmbeddingKind kind = EmbeddingKind::kWord;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // rows x dim, row-major
  bool trainable = false;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * dim, dim}; }
};

// Deterministic pseudorandom vector for `word`: depends only on (word, seed,
// dim), entries ~ N(0, 1/dim).
std::vector<double> seeded_vector(std::string_view word, std::uint64_t seed, std::size_t dim);

// Word table with a seeded vector for every vocabulary entry; the PAD row is
// zero. Non-trainable.
EmbeddingTable seeded_word_table(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

/// Reads a textual embedding file ("<V> <d>" header, then one "word v1 .. vd"
/// line per word). Vocabulary words found in the file copy their row; the
/// rest get seeded_vector(word, seed, dim). Throws kFormat when the header
/// dimension differs from `dim` or a line is malformed.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               std::uint64_t seed);

// Writes the table in the same textual format, one line per vocabulary word,
// with round-trip precision.
void write_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, const EmbeddingTable& table);

// Word -> vector view with UNK fallback.
class EmbeddingLookup {
 public:
  EmbeddingLookup(const Vocabulary& vocab, const EmbeddingTable& table) : vocab_(&vocab), table_(&table) {}

  std::span<const double> operator()(std::string_view word) const { return table_->row(vocab_->word_id(word)); }
  std::size_t dim() const noexcept { return table_->dim; }
  const Vocabulary& vocab() const noexcept { return *vocab_; }
  const EmbeddingTable& table() const noexcept { return *table_; }

 private:
  const Vocabulary* vocab_;
  const EmbeddingTable* table_;
};

}  // namespace rage::corpus
