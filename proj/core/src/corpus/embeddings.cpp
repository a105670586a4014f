#include "rage/corpus/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "rage/error.hpp"

namespace rage::corpus {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<double> seeded_vector(std::string_view word, std::uint64_t seed, std::size_t dim) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fnv1a(word)), static_cast<std::uint32_t>(fnv1a(word) >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

EmbeddingTable seeded_word_table(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table{EmbeddingKind::kWord, vocab.size(), dim, std::vector<double>(vocab.size() * dim, 0.0), false};
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (id == Vocabulary::kPad) continue;
    auto v = seeded_vector(vocab.word(id), seed, dim);
    std::copy(v.begin(), v.end(), table.row(id).begin());
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, path.string() + ": missing header");
  std::size_t n_words = 0, file_dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> n_words >> file_dim)) {
      throw Error(ErrorCode::kFormat, path.string() + ":1: header must be '<V> <d>'");
    }
  }
  if (file_dim != dim) {
    throw Error(ErrorCode::kFormat, path.string() + ": embedding dimension " + std::to_string(file_dim) +
                                        " does not match configured " + std::to_string(dim));
  }
  EmbeddingTable table = seeded_word_table(vocab, dim, seed);
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": bad number '" + token + "'");
      }
      values.push_back(x);
    }
    if (values.size() != dim) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": expected " +
                                          std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    if (!vocab.contains(word)) continue;
    std::copy(values.begin(), values.end(), table.row(vocab.word_id(word)).begin());
  }
  return table;
}

void write_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, const EmbeddingTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << vocab.size() << ' ' << table.dim << '\n';
  char buf[64];
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out << vocab.word(id);
    for (double x : table.row(id)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace rage::corpus
