#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <type_traits>
#include <string>
#include <vector>

#include "rage/corpus/embeddings.hpp"
#include "rage/corpus/vocabulary.hpp"
#include "rage/model/model.hpp"
#include "rage/retrieval/wmd.hpp"

namespace rage::testing {

struct TinySpec {
  std::size_t dim = 8;
  std::size_t layers = 2;
  std::size_t vocab = 20;
  std::size_t tags = 5;
  bool use_review = true;
  bool use_pos = true;
  std::uint64_t seed = 1;
  double init_scale = 0.5;
};

inline corpus::EmbeddingTable random_table(std::size_t rows, std::size_t dim, std::uint64_t seed, double scale) {
  corpus::EmbeddingTable table;
  table.rows = rows;
  table.dim = dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (std::size_t i = 0; i < rows * dim; ++i) table.values.push_back(normal(rng));
  return table;
}

template <typename T>
model::Model<T> tiny_model(const TinySpec& spec = {}) {
  model::ModelConfig c;
  c.dim = spec.dim;
  c.encoder_layers = spec.layers;
  c.decoder_layers = spec.layers;
  c.vocab_size = spec.vocab;
  c.tag_count = spec.tags;
  c.use_review = spec.use_review;
  c.use_pos = spec.use_pos;
  std::vector<std::size_t> tags(spec.vocab);
  for (std::size_t w = 0; w < tags.size(); ++w) tags[w] = w % spec.tags;
  return model::Model<T>::create(c, random_table(spec.vocab, spec.dim, spec.seed * 7919 + 1, spec.init_scale), tags,
                                 spec.seed);
}

template <typename T>
numerics::Tensor<T> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  auto out = numerics::Tensor<T>::matrix(rows, cols);
  for (auto& v : out.values()) v = static_cast<T>(normal(rng));
  return out;
}

inline model::TokenSequence random_tokens(std::size_t length, std::size_t vocab, std::size_t tags, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  model::TokenSequence out;
  for (std::size_t i = 0; i < length; ++i) {
    out.words.push_back(corpus::Vocabulary::kReservedWords + rng() % (vocab - corpus::Vocabulary::kReservedWords));
    out.tags.push_back(rng() % tags);
  }
  return out;
}

// Word vectors given explicitly, for retrieval and metric oracles.
class PlantedVectors {
 public:
  void set(const std::string& word, std::vector<double> v) { vectors_[word] = std::move(v); }
  retrieval::VectorLookup lookup() const {
    return [this](std::string_view w) { return std::span<const double>(vectors_.at(std::string(w))); };
  }

 private:
  std::map<std::string, std::vector<double>> vectors_;
};

// Minimum transport cost by enumerating every basic feasible plan: choose
// m+n-1 cells, solve the marginal equations on them, keep non-negative
// solutions. Independent of the flow solver.
inline double brute_force_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                    const std::vector<std::vector<double>>& cost) {
  const std::size_t m = supply.size(), n = demand.size(), cells = m * n;
  const std::size_t basis = m + n - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(cells, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(std::min(basis, cells)), 1);
  std::sort(pick.begin(), pick.end());
  do {
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < cells; ++c) {
      if (pick[c]) chosen.push_back(c);
    }
    // Equations: row sums (m) and column sums (n) on the chosen cells.
    const std::size_t eqs = m + n, vars = chosen.size();
    std::vector<std::vector<double>> a(eqs, std::vector<double>(vars + 1, 0.0));
    for (std::size_t k = 0; k < vars; ++k) {
      a[chosen[k] / n][k] = 1.0;
      a[m + chosen[k] % n][k] = 1.0;
    }
    for (std::size_t i = 0; i < m; ++i) a[i][vars] = supply[i];
    for (std::size_t j = 0; j < n; ++j) a[m + j][vars] = demand[j];
    // Gauss-Jordan with partial pivoting.
    std::vector<std::size_t> pivot_col;
    std::size_t row = 0;
    for (std::size_t col = 0; col < vars && row < eqs; ++col) {
      std::size_t p = row;
      for (std::size_t r = row; r < eqs; ++r) {
        if (std::abs(a[r][col]) > std::abs(a[p][col])) p = r;
      }
      if (std::abs(a[p][col]) < 1e-12) continue;
      std::swap(a[p], a[row]);
      const double d = a[row][col];
      for (auto& x : a[row]) x /= d;
      for (std::size_t r = 0; r < eqs; ++r) {
        if (r == row || a[r][col] == 0.0) continue;
        const double f = a[r][col];
        for (std::size_t c = 0; c <= vars; ++c) a[r][c] -= f * a[row][c];
      }
      pivot_col.push_back(col);
      ++row;
    }
    bool consistent = true;
    for (std::size_t r = row; r < eqs; ++r) consistent = consistent && std::abs(a[r][vars]) < 1e-9;
    if (!consistent || pivot_col.size() != vars) continue;  // singular or infeasible basis
    std::vector<double> x(vars, 0.0);
    bool feasible = true;
    for (std::size_t r = 0; r < pivot_col.size(); ++r) {
      x[pivot_col[r]] = a[r][vars];
      feasible = feasible && a[r][vars] >= -1e-12;
    }
    if (!feasible) continue;
    double total = 0.0;
    for (std::size_t k = 0; k < vars; ++k) total += x[k] * cost[chosen[k] / n][chosen[k] % n];
    best = std::min(best, total);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

// WMD from the definition: nBOW masses, Euclidean ground cost, brute-force
// transport.
inline double brute_force_wmd(const std::vector<std::string>& a, const std::vector<std::string>& b,
                              const retrieval::VectorLookup& vectors) {
  auto nbow = [](const std::vector<std::string>& doc) {
    std::map<std::string, double> counts;
    for (const auto& w : doc) counts[w] += 1.0;
    std::vector<std::string> words;
    std::vector<double> mass;
    for (const auto& [w, c] : counts) {
      words.push_back(w);
      mass.push_back(c / static_cast<double>(doc.size()));
    }
    return std::pair{words, mass};
  };
  const auto [wa, ma] = nbow(a);
  const auto [wb, mb] = nbow(b);
  std::vector<std::vector<double>> cost(wa.size(), std::vector<double>(wb.size()));
  for (std::size_t i = 0; i < wa.size(); ++i) {
    for (std::size_t j = 0; j < wb.size(); ++j) {
      const auto x = vectors(wa[i]), y = vectors(wb[j]);
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
      cost[i][j] = wa[i] == wb[j] ? 0.0 : std::sqrt(s);
    }
  }
  return brute_force_transport(ma, mb, cost);
}

struct Enumerated {
  std::vector<std::size_t> tokens;
  double log_prob = -std::numeric_limits<double>::infinity();
};

// Best answer over every sequence of at most max_len non-END words (ids in
// `words`) followed by END, each scored by summing rows of the full
// teacher-forced recomputation.
template <typename T>
Enumerated exhaustive_best(const model::Model<T>& m, const model::TokenSequence& question,
                           const std::type_identity_t<numerics::Tensor<T>>* review, const std::vector<std::size_t>& words,
                           std::size_t max_len) {
  Enumerated best;
  std::vector<std::size_t> seq;
  std::function<void()> visit = [&] {
    const auto lp = m.log_probs(question, seq, review);
    double total = 0.0;
    for (std::size_t j = 0; j < seq.size(); ++j) total += static_cast<double>(lp(j, seq[j]));
    total += static_cast<double>(lp(seq.size(), corpus::Vocabulary::kEnd));
    if (total > best.log_prob) best = {seq, total};
    if (seq.size() == max_len) return;
    for (auto w : words) {
      seq.push_back(w);
      visit();
      seq.pop_back();
    }
  };
  visit();
  return best;
}

}  // namespace rage::testing
