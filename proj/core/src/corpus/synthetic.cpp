#include "rage/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>
#include <utility>

#include "rage/error.hpp"

namespace rage::corpus {

namespace {

struct AspectSpec {
  std::string aspect;
  std::vector<std::string> polarities;
};

const std::vector<AspectSpec>& aspect_specs() {
  static const std::vector<AspectSpec> specs = {
      {"battery", {"long", "short", "decent"}},   {"screen", {"bright", "dim", "vivid"}},
      {"camera", {"crisp", "blurry", "grainy"}},  {"price", {"cheap", "expensive", "fair"}},
      {"sound", {"loud", "quiet", "tinny"}},      {"size", {"compact", "bulky", "slim"}},
      {"signal", {"strong", "weak", "stable"}},   {"charging", {"fast", "slow", "steady"}},
  };
  return specs;
}

// Question template i is always answered with answer template i.
const std::vector<std::pair<std::string, std::string>>& qa_templates() {
  static const std::vector<std::pair<std::string, std::string>> templates = {
      {"how is the {a} of this phone ?", "the {a} is {p} ."},
      {"what do you think about the {a} ?", "i think the {a} is quite {p}"},
      {"can you tell me about the {a} quality ?", "{a} quality is really {p} overall"},
  };
  return templates;
}

const std::vector<std::string>& fact_templates() {
  static const std::vector<std::string> templates = {
      "the {a} is {p}",
      "{a} feels really {p} to me",
      "honestly the {a} is {p}",
  };
  return templates;
}

const std::vector<std::string>& filler_clauses() {
  static const std::vector<std::string> clauses = {
      "i bought it for my mother",       "the seller replied quickly",
      "the package arrived on time",     "overall i am satisfied with this purchase",
      "my friend recommended this store", "delivery took three days",
      "the box was a little damaged",    "customer service was helpful",
      "i will buy again next year",      "it came with a free case",
  };
  return clauses;
}

std::string fill(std::string text, const std::string& aspect, const std::string& polarity) {
  for (auto [key, value] : {std::pair<std::string, std::string>{"{a}", aspect}, {"{p}", polarity}}) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key)) {
      text.replace(pos, key.size(), value);
    }
  }
  return text;
}

std::string product_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "prod%04zu", index);
  return buf;
}

}  // namespace

const std::vector<std::string>& synthetic_aspects() {
  static const std::vector<std::string> aspects = [] {
    std::vector<std::string> out;
    for (const auto& s : aspect_specs()) out.push_back(s.aspect);
    return out;
  }();
  return aspects;
}

const std::vector<std::string>& synthetic_polarities(const std::string& aspect) {
  for (const auto& s : aspect_specs()) {
    if (s.aspect == aspect) return s.polarities;
  }
  throw Error(ErrorCode::kContractViolation, "unknown synthetic aspect: " + aspect);
}

const std::map<std::string, std::string, std::less<>>& synthetic_lexicon() {
  static const std::map<std::string, std::string, std::less<>> lexicon = [] {
    std::map<std::string, std::string, std::less<>> lex = {
        {"the", "DT"},        {"is", "VBZ"},       {"of", "IN"},       {"this", "DT"},     {"phone", "NN"},
        {"?", "."},           {".", "."},          {",", ","},         {"how", "WRB"},     {"what", "WP"},
        {"do", "VBP"},        {"you", "PRP"},      {"think", "VBP"},   {"about", "IN"},    {"i", "PRP"},
        {"quite", "RB"},      {"can", "MD"},       {"tell", "VB"},     {"me", "PRP"},      {"quality", "NN"},
        {"really", "RB"},     {"overall", "RB"},   {"feels", "VBZ"},   {"to", "TO"},       {"honestly", "RB"},
        {"bought", "VBD"},    {"it", "PRP"},       {"for", "IN"},      {"my", "PRP$"},     {"mother", "NN"},
        {"seller", "NN"},     {"replied", "VBD"},  {"quickly", "RB"},  {"package", "NN"},  {"arrived", "VBD"},
        {"on", "IN"},         {"time", "NN"},      {"am", "VBP"},      {"satisfied", "JJ"}, {"with", "IN"},
        {"purchase", "NN"},   {"friend", "NN"},    {"recommended", "VBD"}, {"store", "NN"}, {"delivery", "NN"},
        {"took", "VBD"},      {"three", "CD"},     {"days", "NNS"},    {"box", "NN"},      {"was", "VBD"},
        {"a", "DT"},          {"little", "JJ"},    {"damaged", "JJ"},  {"customer", "NN"}, {"service", "NN"},
        {"helpful", "JJ"},    {"will", "MD"},      {"buy", "VB"},      {"again", "RB"},    {"next", "JJ"},
        {"year", "NN"},       {"came", "VBD"},     {"free", "JJ"},     {"case", "NN"},     {"and", "CC"},
    };
    for (const auto& s : aspect_specs()) {
      lex[s.aspect] = "NN";
      for (const auto& p : s.polarities) lex[p] = "JJ";
    }
    return lex;
  }();
  return lexicon;
}

SynthCorpus synth_corpus(const SynthOptions& options) {
  if (options.n_products == 0 || options.n_pairs == 0 || options.n_reviews == 0) {
    throw Error(ErrorCode::kContractViolation, "synthetic corpus sizes must be >= 1");
  }
  if (options.test_products >= options.n_products && options.test_products > 0) {
    throw Error(ErrorCode::kContractViolation, "test_products must leave at least one training product");
  }
  std::mt19937_64 rng(options.seed);
  const auto& specs = aspect_specs();
  const std::size_t n_aspects = specs.size();

  SynthCorpus out;
  for (std::size_t p = 0; p < options.n_products; ++p) {
    SynthProduct product{product_name(p), {}};
    for (const auto& s : specs) {
      std::uniform_int_distribution<std::size_t> pick(0, s.polarities.size() - 1);
      product.facts.push_back({s.aspect, s.polarities[pick(rng)]});
    }
    out.products.push_back(std::move(product));
  }

  // Reviews: review r of a product covers aspects (r * per + i) mod n_aspects,
  // so with per * reviews >= 2 * n_aspects every aspect is stated at least twice.
  const std::size_t reviews_per_product = std::max<std::size_t>(2, options.n_reviews);
  const std::size_t per_review = std::min(n_aspects, (2 * n_aspects + reviews_per_product - 1) / reviews_per_product);
  const auto& fillers = filler_clauses();
  const auto& facts = fact_templates();
  for (const auto& product : out.products) {
    for (std::size_t r = 0; r < reviews_per_product; ++r) {
      std::vector<std::string> clauses;
      std::uniform_int_distribution<std::size_t> pick_filler(0, fillers.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_fact(0, facts.size() - 1);
      clauses.push_back(fillers[pick_filler(rng)]);
      for (std::size_t i = 0; i < per_review; ++i) {
        const auto& fact = product.facts[(r * per_review + i) % n_aspects];
        clauses.push_back(fill(facts[pick_fact(rng)], fact.aspect, fact.polarity));
        clauses.push_back(fillers[pick_filler(rng)]);
      }
      std::string text;
      for (std::size_t c = 0; c < clauses.size(); ++c) {
        if (c) text += " , ";
        text += clauses[c];
      }
      out.raw.reviews.push_back({product.product_id, std::move(text)});
    }
  }

  // Pairs: distinct (product, aspect, template) triples in a seeded order,
  // with training products first and held-out products spread over the rest.
  const auto& templates = qa_templates();
  const std::size_t first_test = options.n_products - options.test_products;
  auto triples_for = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::array<std::size_t, 3>> triples;
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t a = 0; a < n_aspects; ++a) {
        for (std::size_t t = 0; t < templates.size(); ++t) triples.push_back({p, a, t});
      }
    }
    std::shuffle(triples.begin(), triples.end(), rng);
    return triples;
  };
  auto train_triples = triples_for(0, first_test);
  auto test_triples = triples_for(first_test, options.n_products);

  std::size_t n_test = 0;
  if (options.test_products > 0) {
    n_test = std::max<std::size_t>(1, options.n_pairs * options.test_products / options.n_products);
  }
  const std::size_t n_train = options.n_pairs - std::min(n_test, options.n_pairs);
  if (n_train > train_triples.size() || n_test > test_triples.size()) {
    throw Error(ErrorCode::kContractViolation, "too many pairs requested for the number of products");
  }
  if (options.validation_pairs >= n_train && options.validation_pairs > 0) {
    throw Error(ErrorCode::kContractViolation, "validation_pairs must leave training pairs");
  }
  auto emit = [&](const std::array<std::size_t, 3>& triple, const std::string& split) {
    const auto& product = out.products[triple[0]];
    const auto& fact = product.facts[triple[1]];
    const auto& [q, a] = templates[triple[2]];
    out.raw.qa.push_back({product.product_id, fill(q, fact.aspect, fact.polarity), fill(a, fact.aspect, fact.polarity), split});
    out.pair_aspects.push_back(fact.aspect);
  };
  for (std::size_t i = 0; i < n_train; ++i) {
    emit(train_triples[i], i < n_train - options.validation_pairs ? "train" : "validation");
  }
  for (std::size_t i = 0; i < n_test; ++i) emit(test_triples[i], "test");
  return out;
}

}  // namespace rage::corpus
