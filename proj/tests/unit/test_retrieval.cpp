#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "rage/corpus/dataset.hpp"
#include "rage/corpus/embeddings.hpp"
#include "rage/corpus/synthetic.hpp"
#include "rage/corpus/tagger.hpp"
#include "rage/corpus/vocabulary.hpp"
#include "rage/error.hpp"
#include "rage/retrieval/cache.hpp"
#include "rage/retrieval/snippets.hpp"
#include "rage/retrieval/transport.hpp"
#include "rage/retrieval/weights.hpp"
#include "rage/retrieval/wmd.hpp"

using namespace rage;
using namespace rage::retrieval;
using testing::PlantedVectors;

namespace {

std::vector<std::string> split(const std::string& text) { return corpus::whitespace_tokenize(text); }

corpus::Review review(const std::string& id, const std::string& text) {
  corpus::Review r{id, "p", {}};
  for (const auto& w : split(text)) r.tokens.push_back({w, "X"});
  return r;
}

corpus::QAPair pair(const std::string& id, const std::string& product, const std::string& q, const std::string& a) {
  corpus::QAPair p{id, product, {}, {}, corpus::Split::kTrain};
  for (const auto& w : split(q)) p.question.push_back({w, "X"});
  for (const auto& w : split(a)) p.answer.push_back({w, "X"});
  return p;
}

PlantedVectors letter_vectors(std::uint64_t seed, std::size_t dim = 2) {
  PlantedVectors v;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (char c = 'a'; c <= 'z'; ++c) {
    std::vector<double> x(dim);
    for (auto& e : x) e = u(rng);
    v.set(std::string(1, c), x);
  }
  return v;
}

}  // namespace

TEST_SUITE("retrieval") {
  TEST_CASE("transport solver basics") {
    const std::vector<std::uint64_t> supply{3, 1}, demand{2, 2};
    const std::vector<double> cost{0, 1, 1, 0};
    CHECK(min_cost_transport(supply, demand, cost) == doctest::Approx(1.0));
  }

  TEST_CASE("wmd examples") {
    PlantedVectors v;
    v.set("u", {0, 0});
    v.set("v", {3, 4});
    v.set("x", {1, 0});
    v.set("y", {0, 2});
    const auto lookup = v.lookup();
    const std::vector<std::string> u{"u"}, w{"v"}, uv{"u", "v"}, xy{"x", "y"}, vu{"v", "u"};
    CHECK(wmd(uv, vu, lookup) == 0.0);
    CHECK(wmd(u, w, lookup) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(wmd(uv, xy, lookup) == doctest::Approx(testing::brute_force_wmd(uv, xy, lookup)).epsilon(1e-12));
    CHECK_THROWS_AS(wmd(std::vector<std::string>{}, u, lookup), Error);
  }

  TEST_CASE("wmd matches brute-force transport on random small documents") {
    std::mt19937_64 rng(17);
    const auto vectors = letter_vectors(3);
    const auto lookup = vectors.lookup();
    for (int trial = 0; trial < 50; ++trial) {
      auto doc = [&] {
        std::vector<std::string> d;
        const std::size_t len = 1 + rng() % 5;
        for (std::size_t i = 0; i < len; ++i) d.emplace_back(1, static_cast<char>('a' + rng() % 3 + 3 * (trial % 2)));
        return d;
      };
      const auto a = doc(), b = doc();
      const double solver = wmd(a, b, lookup);
      CHECK(std::abs(solver - testing::brute_force_wmd(a, b, lookup)) < 1e-9);
      CHECK(solver == doctest::Approx(wmd(b, a, lookup)).epsilon(1e-12));
      CHECK(solver >= 0.0);
    }
  }

  TEST_CASE("wmd scales with the embeddings") {
    PlantedVectors v, scaled;
    const auto base = letter_vectors(5);
    const auto lookup = base.lookup();
    for (char c : std::string("abcd")) {
      const auto x = lookup(std::string(1, c));
      scaled.set(std::string(1, c), {2.5 * x[0], 2.5 * x[1]});
    }
    const std::vector<std::string> a{"a", "b", "b"}, b{"c", "d"};
    CHECK(wmd(a, b, scaled.lookup()) == doctest::Approx(2.5 * wmd(a, b, lookup)).epsilon(1e-12));
  }

  TEST_CASE("best snippet") {
    PlantedVectors v = letter_vectors(9, 3);
    const auto lookup = v.lookup();
    const auto query = split("a b c d e f g h i j");
    const auto r = review("r1", "k l m n o p q r s t a b c d e f g h i j");
    const auto s = best_snippet(r, query, 10, lookup);
    CHECK(s.score == 0.0);
    CHECK(s.offset == 10);
    CHECK(s.tokens == query);

    const auto shorter = review("r2", "a b c");
    const auto whole = best_snippet(shorter, query, 10, lookup);
    CHECK(whole.tokens == split("a b c"));

    // Exhaustive scan oracle over every window.
    const auto noisy = review("r3", "x y z a q c w v b u t s r p o");
    const auto best = best_snippet(noisy, split("a b c"), 4, lookup);
    const auto words = corpus::words_of(noisy.tokens);
    double oracle = INFINITY;
    std::size_t oracle_offset = 0;
    for (std::size_t i = 0; i + 4 <= words.size(); ++i) {
      const std::vector<std::string> window(words.begin() + i, words.begin() + i + 4);
      const double d = testing::brute_force_wmd(window, split("a b c"), lookup);
      if (d < oracle - 1e-12) {
        oracle = d;
        oracle_offset = i;
      }
    }
    CHECK(best.score == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(best.offset == oracle_offset);
  }

  TEST_CASE("question expansion") {
    PlantedVectors v = letter_vectors(13);
    const auto lookup = v.lookup();
    std::vector<corpus::QAPair> index{pair("t0", "p1", "a b c d", "e f g h"), pair("t1", "p2", "a b c e", "i j k l"),
                                      pair("t2", "p3", "m n o p", "q r s t")};
    const auto query = pair("x", "p9", "a b c e", "unused words here now");
    const auto expansion = expand_question(query, index, lookup);
    CHECK(expansion.source_pair_id == "t1");
    CHECK(expansion.distance == 0.0);
    CHECK(expansion.query == split("a b c e i j k l"));

    // Brute-force nearest neighbour.
    const auto other = pair("y", "p9", "m a q s", "unused");
    const auto found = expand_question(other, index, lookup);
    std::string oracle;
    double best = INFINITY;
    for (const auto& p : index) {
      const double d = testing::brute_force_wmd(corpus::words_of(other.question), corpus::words_of(p.question), lookup);
      if (d < best - 1e-12) {
        best = d;
        oracle = p.pair_id;
      }
    }
    CHECK(found.source_pair_id == oracle);

    const std::vector<corpus::QAPair> single{pair("only", "p5", "z z z z", "the only answer")};
    CHECK(expand_question(query, single, lookup).query == split("a b c e the only answer"));
    // Same-product pairs are not eligible.
    const std::vector<corpus::QAPair> same{pair("s", "p9", "a b c e", "x y z w")};
    CHECK_THROWS_AS(expand_question(query, same, lookup), Error);
  }

  TEST_CASE("threshold calibration") {
    std::vector<double> twelve;
    for (int i = 1; i <= 12; ++i) twelve.push_back(i);
    CHECK(calibrate_pi(std::vector<std::vector<double>>{twelve}) == 5.5);
    CHECK(calibrate_pi(std::vector<std::vector<double>>{{0.5, 0.5}, {0.5}}) == 0.5);
    // Two pairs: top-10 of the first (1..10) and all three of the second.
    std::vector<double> first;
    for (int i = 15; i >= 1; --i) first.push_back(i);
    const double expected = (55.0 + 2.0 + 4.0 + 6.0) / 13.0;
    CHECK(calibrate_pi(std::vector<std::vector<double>>{first, {2.0, 6.0, 4.0}}) == doctest::Approx(expected));
    CHECK_THROWS_AS(calibrate_pi(std::vector<std::vector<double>>{{}}), Error);
  }

  TEST_CASE("snippet collection") {
    PlantedVectors v;
    v.set("near", {0.0, 0.0});
    v.set("mid", {0.2, 0.0});
    v.set("far", {0.9, 0.0});
    v.set("q", {0.0, 0.0});
    v.set("other", {0.1, 0.0});
    const auto lookup = v.lookup();
    std::vector<corpus::Review> reviews{review("r0", "far far far"), review("r1", "near near"),
                                        review("r2", "other other")};
    std::vector<const corpus::Review*> ptrs{&reviews[0], &reviews[1], &reviews[2]};
    const auto query = split("q");
    const auto set = collect_snippets(query, ptrs, 0.5, 10, lookup);
    CHECK(set.snippets.size() == 2);
    CHECK(!set.excluded);
    CHECK(collect_snippets(query, ptrs, 0.05, 10, lookup).excluded);

    std::vector<const corpus::Review*> reversed(ptrs.rbegin(), ptrs.rend());
    CHECK(collect_snippets(query, reversed, 0.5, 10, lookup).snippets == set.snippets);
    CHECK_THROWS_AS(collect_snippets(query, ptrs, 0.0, 10, lookup), Error);
  }

  TEST_CASE("snippet word weights") {
    PlantedVectors v;
    v.set("a", {1, 0});
    v.set("b", {0, 1});
    v.set("c", {1, 1});
    const auto lookup = v.lookup();
    auto snip = [](const std::string& t) { return Snippet{split(t), 0.1, "r", 0}; };
    // "a" in all 4 snippets; "b" in one, orthogonal to everything else.
    const std::vector<Snippet> s{snip("a b"), snip("a"), snip("a"), snip("a")};
    const auto w = snippet_word_weights(s, lookup);
    REQUIRE(w.size() == 2);
    CHECK(w.entries[0].word == "a");
    CHECK(w.entries[0].weight == doctest::Approx(4.0));
    CHECK(w.entries[0].normalized == 1.0);
    CHECK(w.entries[1].weight == doctest::Approx(0.25));
    CHECK(w.row(1)[1] == doctest::Approx(0.25 / 4.0));

    // Direct evaluation of the formula on a 3-snippet set.
    const std::vector<Snippet> t{snip("a c"), snip("b"), snip("c c a")};
    const auto got = snippet_word_weights(t, lookup);
    std::map<std::string, double> expected;
    double max_weight = 0.0;
    for (const std::string word : {"a", "c", "b"}) {
      double f = 0.0, rel = 0.0;
      for (const auto& sn : t) {
        const bool contains = std::find(sn.tokens.begin(), sn.tokens.end(), word) != sn.tokens.end();
        f += contains;
        double best = 0.0;
        for (const auto& other : sn.tokens) {
          const auto x = lookup(word), y = lookup(other);
          const double cos = (x[0] * y[0] + x[1] * y[1]) / (std::hypot(x[0], x[1]) * std::hypot(y[0], y[1]));
          best = std::max(best, word == other ? 1.0 : cos);
        }
        rel += best;
      }
      expected[word] = f / 3.0 * rel;
      max_weight = std::max(max_weight, expected[word]);
    }
    std::size_t at_max = 0;
    for (const auto& e : got.entries) {
      CHECK(e.weight == doctest::Approx(expected[e.word]).epsilon(1e-12));
      CHECK(e.normalized > 0.0);
      CHECK(e.normalized <= 1.0);
      at_max += e.normalized == 1.0;
    }
    CHECK(at_max == 1);

    // Self-similarity keeps a zero vector's weight positive.
    PlantedVectors zero;
    zero.set("z", {0, 0});
    const auto z = snippet_word_weights(std::vector<Snippet>{{{"z"}, 0.1, "r", 0}}, zero.lookup());
    CHECK(z.entries[0].normalized == 1.0);
    CHECK(z.row(0)[0] == 0.0);
    CHECK_THROWS_AS(snippet_word_weights(std::vector<Snippet>{}, zero.lookup()), Error);
  }

  TEST_CASE("synthetic corpus retrieval keeps fact-bearing snippets") {
    corpus::SynthOptions options;
    const auto synth = corpus::synth_corpus(options);
    const auto ds = corpus::preprocess(synth.raw, corpus::default_tagger());
    const auto vocab = corpus::Vocabulary::build(ds);
    const auto table = corpus::seeded_word_table(vocab, 32, 7);
    const corpus::EmbeddingLookup lookup(vocab, table);
    const auto cache = build_snippet_cache(ds, lookup, {});
    CHECK(cache.calibrated);
    CHECK(cache.pi > 0.0);
    REQUIRE(cache.sets.size() == ds.pairs.size());
    std::size_t retained = 0, with_fact = 0;
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
      const auto& set = cache.sets[i];
      CHECK((set.excluded || set.snippets.size() >= 2));
      for (const auto& s : set.snippets) CHECK(s.score <= cache.pi);
      if (set.excluded) continue;
      ++retained;
      const auto answer = corpus::words_of(ds.pairs[i].answer);
      bool found = false;
      for (const auto& s : set.snippets) {
        for (const auto& w : s.tokens) found = found || (w == answer[answer.size() - 2] || w == answer.back());
      }
      with_fact += found;
    }
    CHECK(retained >= 40);
    CHECK(with_fact * 10 >= retained * 9);

    // Fixed threshold skips calibration.
    RetrievalOptions fixed;
    fixed.pi = 0.75;
    const auto overridden = build_snippet_cache(ds, lookup, fixed);
    CHECK(!overridden.calibrated);
    CHECK(overridden.pi == 0.75);
  }

  TEST_CASE("snippet cache files round trip") {
    SnippetSet a{"qa000001", {{split("the battery is long"), 0.25, "rv000003", 2}}, true};
    SnippetSet b{"qa000002", {{split("x y"), 1.0 / 3.0, "rv000004", 0}, {split("z"), 0.5, "rv000009", 0}}, false};
    const auto path = std::filesystem::temp_directory_path() / "rage_unit_cache.jsonl";
    write_snippet_cache(path, {a, b});
    const auto back = read_snippet_cache(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].pair_id == a.pair_id);
    CHECK(back[0].excluded);
    CHECK(back[1].snippets[0].score == 1.0 / 3.0);
    CHECK(back[1].snippets[1].review_id == "rv000009");
    CHECK(back[1].snippets[0].tokens == split("x y"));
  }
}
