#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "rage/corpus/dataset.hpp"
#include "rage/error.hpp"
#include "rage/model/model.hpp"
#include "rage/numerics/gradcheck.hpp"
#include "rage/numerics/parallel.hpp"

using namespace rage;
using model::TokenSequence;
using numerics::Tensor;
using Vocab = corpus::Vocabulary;

namespace {

// Plain-loop reference implementation of the full model, written against the
// parameter tensors only.
struct Mat {
  std::size_t r = 0, c = 0;
  std::vector<double> v;
  Mat(std::size_t rows, std::size_t cols) : r(rows), c(cols), v(rows * cols, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return v[i * c + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * c + j]; }
};

Mat from(const Tensor<double>& t) {
  Mat m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) m.v[i] = t[i];
  return m;
}

Mat param(const model::Model<double>& m, const std::string& name) { return from(m.params().at(name).tensor); }

Mat mul(const Mat& a, const Mat& b) {
  Mat out(a.r, b.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < b.c; ++j)
      for (std::size_t k = 0; k < a.c; ++k) out.at(i, j) += a.at(i, k) * b.at(k, j);
  return out;
}

Mat plus(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
  return a;
}

Mat plus_row(Mat a, const Mat& bias) {
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) a.at(i, j) += bias.at(0, j);
  return a;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat conv_glu(const Mat& x, const Mat& w, const Mat& b, std::size_t k, std::size_t left) {
  const std::size_t d = x.c;
  Mat out(x.r, d);
  for (std::size_t t = 0; t < x.r; ++t) {
    std::vector<double> pre(2 * d);
    for (std::size_t o = 0; o < 2 * d; ++o) pre[o] = b.at(0, o);
    for (std::size_t tap = 0; tap < k; ++tap) {
      const long src = static_cast<long>(t + tap) - static_cast<long>(left);
      if (src < 0 || src >= static_cast<long>(x.r)) continue;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t o = 0; o < 2 * d; ++o) pre[o] += x.at(static_cast<std::size_t>(src), i) * w.at(tap * d + i, o);
    }
    for (std::size_t i = 0; i < d; ++i) out.at(t, i) = pre[i] * sigmoid(pre[d + i]);
  }
  return out;
}

std::vector<double> softmax(std::vector<double> s) {
  double mx = s[0];
  for (double x : s) mx = std::max(mx, x);
  double total = 0.0;
  for (double& x : s) total += (x = std::exp(x - mx));
  for (double& x : s) x /= total;
  return s;
}

Mat embed(const model::Model<double>& m, const TokenSequence& tokens, std::size_t first) {
  const auto word = param(m, "embed.word"), position = param(m, "embed.position");
  const bool pos = m.config().use_pos;
  const std::size_t d = m.config().dim;
  Mat out(tokens.size(), d);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      out.at(t, i) = word.at(tokens.words[t], i) + position.at(first + t, i);
      if (pos) out.at(t, i) += param(m, "embed.pos").at(tokens.tags[t], i);
    }
  }
  return out;
}

Mat reference_forward(const model::Model<double>& m, const TokenSequence& question,
                      const std::vector<std::size_t>& answer, const Tensor<double>* review) {
  const auto& c = m.config();
  const std::size_t d = c.dim;
  // Encoder.
  const Mat e = embed(m, question, 1);
  Mat x = e;
  for (std::size_t l = 0; l < c.encoder_layers; ++l) {
    const std::string p = "enc.conv" + std::to_string(l);
    x = plus(conv_glu(x, param(m, p + ".weight"), param(m, p + ".bias"), c.encoder_kernel, (c.encoder_kernel - 1) / 2),
             x);
  }
  const Mat z = plus_row(mul(x, param(m, "enc.out.weight")), param(m, "enc.out.bias"));
  const Mat attended = plus(z, e);

  // Generator.
  const TokenSequence inputs = m.decoder_inputs(answer);
  const Mat ey = embed(m, inputs, 0);
  Mat y = ey;
  for (std::size_t l = 0; l < c.decoder_layers; ++l) {
    const std::string id = std::to_string(l);
    const Mat h = conv_glu(y, param(m, "dec.conv" + id + ".weight"), param(m, "dec.conv" + id + ".bias"),
                           c.decoder_kernel, c.decoder_kernel - 1);
    const Mat query =
        plus(plus_row(mul(h, param(m, "dec.att" + id + ".weight")), param(m, "dec.att" + id + ".bias")), ey);
    Mat next(y.r, d);
    for (std::size_t t = 0; t < y.r; ++t) {
      std::vector<double> scores(z.r);
      for (std::size_t i = 0; i < z.r; ++i)
        for (std::size_t k = 0; k < d; ++k) scores[i] += query.at(t, k) * z.at(i, k);
      const auto a = softmax(scores);
      std::vector<double> ctx(d, 0.0);
      for (std::size_t i = 0; i < z.r; ++i)
        for (std::size_t k = 0; k < d; ++k) ctx[k] += a[i] * attended.at(i, k);
      std::vector<double> updated(d);
      if (review && c.use_review) {
        const std::size_t n = review->rows();
        std::vector<double> rs(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = 0; k < d; ++k) rs[i] += ctx[k] * (*review)(i, k);
        const auto ra = softmax(rs);
        std::vector<double> o(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = 0; k < d; ++k) o[k] += ra[i] * (*review)(i, k);
        Mat features(1, 3 * d);
        for (std::size_t k = 0; k < d; ++k) {
          features.at(0, k) = h.at(t, k);
          features.at(0, d + k) = ctx[k];
          features.at(0, 2 * d + k) = o[k];
        }
        const std::string g = "dec.gate" + id;
        Mat hidden = plus_row(mul(features, param(m, g + ".hidden.weight")), param(m, g + ".hidden.bias"));
        for (auto& v : hidden.v) v = std::tanh(v);
        const double gate =
            sigmoid(plus_row(mul(hidden, param(m, g + ".out.weight")), param(m, g + ".out.bias")).at(0, 0));
        for (std::size_t k = 0; k < d; ++k) updated[k] = h.at(t, k) + gate * ctx[k] + (1.0 - gate) * o[k];
      } else {
        for (std::size_t k = 0; k < d; ++k) updated[k] = h.at(t, k) + ctx[k];
      }
      for (std::size_t k = 0; k < d; ++k) next.at(t, k) = updated[k] + y.at(t, k);
    }
    y = next;
  }
  Mat logits = plus_row(mul(y, param(m, "dec.out.weight")), param(m, "dec.out.bias"));
  for (std::size_t t = 0; t < logits.r; ++t) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < logits.c; ++j) mx = std::max(mx, logits.at(t, j));
    double total = 0.0;
    for (std::size_t j = 0; j < logits.c; ++j) total += std::exp(logits.at(t, j) - mx);
    for (std::size_t j = 0; j < logits.c; ++j) logits.at(t, j) -= mx + std::log(total);
  }
  return logits;
}

const TokenSequence kQuestion{{5, 9, 12, 7, 16}, {1, 3, 0, 4, 2}};

template <typename T>
bool rows_identical(const Tensor<T>& a, std::size_t ra, const Tensor<T>& b, std::size_t rb) {
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (a(ra, c) != b(rb, c)) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward matches the loop reference") {
    for (const bool review : {true, false}) {
      for (const bool pos : {true, false}) {
        for (const std::size_t kernel : {std::size_t{2}, std::size_t{3}}) {
          testing::TinySpec spec;
          spec.use_review = review;
          spec.use_pos = pos;
          spec.seed = 3 + kernel;
          auto m = testing::tiny_model<double>(spec);
          // Exercise an odd encoder kernel too.
          if (kernel == 3) {
            auto c = m.config();
            c.encoder_kernel = 3;
            numerics::ParameterSet<double> params;
            std::size_t seed = 100;
            for (const auto& p : m.params()) {
              auto tensor = p->tensor;
              if (p->name.rfind("enc.conv", 0) == 0 && p->name.ends_with(".weight")) {
                tensor = testing::random_matrix<double>(3 * c.dim, 2 * c.dim, ++seed, 0.3);
              }
              params.add(p->name, tensor, p->trainable);
            }
            m = model::Model<double>(c, std::move(params), m.decoder_tags());
          }
          const auto memory = testing::random_matrix<double>(4, spec.dim, 77);
          const std::vector<std::size_t> answer{6, 14, 9, 17, 4, 4, 11};
          const auto got = m.log_probs(kQuestion, answer, review ? &memory : nullptr);
          const auto want = reference_forward(m, kQuestion, answer, review ? &memory : nullptr);
          REQUIRE(got.rows() == answer.size() + 1);
          REQUIRE(got.cols() == spec.vocab);
          double worst = 0.0;
          for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want.v[i]));
          CHECK(worst < 1e-12);
        }
      }
    }
  }

  TEST_CASE("rows are normalized log distributions") {
    const auto m = testing::tiny_model<float>();
    const auto memory = testing::random_matrix<float>(3, 8, 5);
    const auto lp = m.log_probs(kQuestion, {7, 8, 9}, &memory);
    for (std::size_t r = 0; r < lp.rows(); ++r) {
      double total = 0.0;
      for (auto v : lp.row(r)) total += std::exp(static_cast<double>(v));
      CHECK(total == doctest::Approx(1.0).epsilon(1e-5));
    }
  }

  TEST_CASE("generator is causal") {
    const auto m = testing::tiny_model<double>({.seed = 11});
    const auto memory = testing::random_matrix<double>(4, 8, 12);
    const std::vector<std::size_t> base{6, 14, 9, 17, 4, 8};
    const auto ref = m.log_probs(kQuestion, base, &memory);
    for (std::size_t k = 0; k < base.size(); ++k) {
      auto changed = base;
      changed[k] = changed[k] == 10 ? 11 : 10;
      const auto lp = m.log_probs(kQuestion, changed, &memory);
      for (std::size_t r = 0; r <= k; ++r) CHECK(rows_identical(lp, r, ref, r));
      CHECK(!rows_identical(lp, k + 1, ref, k + 1));
    }
  }

  TEST_CASE("incremental steps reproduce the full pass bit for bit") {
    auto run = [](auto tag, bool with_review, std::size_t length) {
      using T = decltype(tag);
      testing::TinySpec spec;
      spec.use_review = with_review;
      spec.seed = 31 + length;
      const auto m = testing::tiny_model<T>(spec);
      const auto memory = testing::random_matrix<T>(5, 8, 32);
      const auto answer = testing::random_tokens(length, spec.vocab, spec.tags, 33 + length).words;
      const auto full = m.log_probs(kQuestion, answer, with_review ? &memory : nullptr);
      const auto encoded = m.encode(kQuestion);
      auto state = m.start();
      bool same = true, ended = false;
      for (std::size_t j = 0; j <= answer.size(); ++j) {
        const auto result = m.step(state, encoded, with_review ? &memory : nullptr);
        same = same && rows_identical(result.log_probs, 0, full, j);
        ended = result.must_end;
        if (j < answer.size()) m.push(state, answer[j]);
      }
      CHECK(same);
      CHECK(ended == (length == model::kMaxSequence));
    };
    for (std::size_t length : {std::size_t{1}, std::size_t{3}, std::size_t{9}, std::size_t{40}}) {
      run(float{}, true, length);
      run(double{}, true, length);
      run(float{}, false, length);
    }
  }

  TEST_CASE("saturated gate selects the context or the review summary") {
    auto m = testing::tiny_model<double>({.seed = 41});
    const auto mem_a = testing::random_matrix<double>(4, 8, 42);
    const auto mem_b = testing::random_matrix<double>(6, 8, 43);
    const std::vector<std::size_t> answer{6, 14, 9};
    auto set_bias = [&](double b) {
      for (std::size_t l = 0; l < m.config().decoder_layers; ++l) {
        m.params().at("dec.gate" + std::to_string(l) + ".out.bias").tensor[0] = b;
      }
    };
    set_bias(1000.0);
    // g = 1: h + c, the same as running without review memory.
    const auto plain = m.log_probs(kQuestion, answer, nullptr);
    const auto with_a = m.log_probs(kQuestion, answer, &mem_a);
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(with_a[i] == doctest::Approx(plain[i]).epsilon(1e-12));

    set_bias(-1000.0);
    // g = 0: h + o; the memory drives the output and matches the reference.
    const auto a = m.log_probs(kQuestion, answer, &mem_a);
    const auto b = m.log_probs(kQuestion, answer, &mem_b);
    const auto want = reference_forward(m, kQuestion, answer, &mem_a);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      differs = differs || a[i] != b[i];
      CHECK(std::abs(a[i] - want.v[i]) < 1e-12);
    }
    CHECK(differs);
  }

  TEST_CASE("ablations drop parameters and ignore their inputs") {
    const auto no_review = testing::tiny_model<float>({.use_review = false});
    CHECK(no_review.params().find("dec.gate0.out.bias") == nullptr);
    const auto mem = testing::random_matrix<float>(3, 8, 1);
    CHECK(no_review.log_probs(kQuestion, {5, 6}, &mem) == no_review.log_probs(kQuestion, {5, 6}, nullptr));

    const auto no_pos = testing::tiny_model<float>({.use_pos = false});
    CHECK(no_pos.params().find("embed.pos") == nullptr);
    auto retagged = kQuestion;
    for (auto& t : retagged.tags) t = (t + 1) % 5;
    CHECK(no_pos.log_probs(retagged, {5, 6}, nullptr) == no_pos.log_probs(kQuestion, {5, 6}, nullptr));
    const auto with_pos = testing::tiny_model<float>();
    CHECK(with_pos.log_probs(retagged, {5, 6}, nullptr) != with_pos.log_probs(kQuestion, {5, 6}, nullptr));
  }

  TEST_CASE("zero convolutions pass embeddings straight through the encoder") {
    auto m = testing::tiny_model<double>({.seed = 51});
    for (std::size_t l = 0; l < m.config().encoder_layers; ++l) {
      for (auto* suffix : {".weight", ".bias"}) {
        for (auto& v : m.params().at("enc.conv" + std::to_string(l) + suffix).tensor.values()) v = 0.0;
      }
    }
    const auto encoded = m.encode(kQuestion);
    const auto word = m.params().at("embed.word").tensor, pos = m.params().at("embed.pos").tensor,
               position = m.params().at("embed.position").tensor, w = m.params().at("enc.out.weight").tensor,
               b = m.params().at("enc.out.bias").tensor;
    for (std::size_t i = 0; i < kQuestion.size(); ++i) {
      for (std::size_t c = 0; c < 8; ++c) {
        const double e = word(kQuestion.words[i], c) + pos(kQuestion.tags[i], c) + position(i + 1, c);
        CHECK(encoded.e(i, c) == doctest::Approx(e).epsilon(1e-14));
        double z = b(0, c);
        for (std::size_t k = 0; k < 8; ++k) {
          z += (word(kQuestion.words[i], k) + pos(kQuestion.tags[i], k) + position(i + 1, k)) * w(k, c);
        }
        CHECK(encoded.z(i, c) == doctest::Approx(z).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("full model gradients match finite differences") {
    for (const bool review : {true, false}) {
      auto m = testing::tiny_model<double>({.layers = 2, .use_review = review, .seed = 61});
      const auto memory = testing::random_matrix<double>(4, 8, 62);
      const std::vector<std::size_t> answer{6, 14, 9, 17};
      const auto report = numerics::check_gradients(m.params(), [&](numerics::Graph<double>& g) {
        const auto lp = m.forward(g, kQuestion, answer, review ? &memory : nullptr);
        std::vector<std::size_t> targets(answer);
        targets.push_back(Vocab::kEnd);
        return g.nll(lp, targets);
      });
      CHECK(report.max_error < 1e-6);
      CHECK(report.checked == m.params().scalar_count(true));
      // The word table is frozen.
      CHECK(!m.params().at("embed.word").trainable);
      CHECK(!m.params().at("embed.word").tensor.has_grad());
    }
  }

  TEST_CASE("conv regions scale with layers, not length") {
    const auto m = testing::tiny_model<float>({.layers = 3});
    const auto answer = testing::random_tokens(40, 20, 5, 9).words;
    const auto before = numerics::region_count(numerics::Region::kConvolution);
    numerics::Graph<float> g;
    m.forward(g, kQuestion, answer, nullptr);
    CHECK(numerics::region_count(numerics::Region::kConvolution) - before == 6);
  }

  TEST_CASE("length limits and configuration errors") {
    const auto m = testing::tiny_model<float>();
    CHECK_THROWS_AS(m.log_probs(kQuestion, std::vector<std::size_t>(41, 5), nullptr), Error);
    CHECK_NOTHROW(m.log_probs(kQuestion, std::vector<std::size_t>(40, 5), nullptr));
    const TokenSequence long_question{std::vector<std::size_t>(41, 5), std::vector<std::size_t>(41, 1)};
    CHECK_THROWS_AS(m.encode(long_question), Error);
    CHECK_THROWS_AS(m.encode(TokenSequence{}), Error);

    model::ModelConfig c;
    c.dim = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    model::ModelConfig ok;
    ok.dim = 8;
    ok.vocab_size = 20;
    ok.tag_count = 5;
    CHECK_THROWS_AS(model::Model<float>::create(ok, testing::random_table(19, 8, 1, 1.0),
                                                std::vector<std::size_t>(20, 0), 1),
                    Error);
    CHECK_THROWS_AS(model::Model<float>::create(ok, testing::random_table(20, 8, 1, 1.0),
                                                std::vector<std::size_t>(19, 0), 1),
                    Error);
  }

  TEST_CASE("decoder tag table") {
    corpus::Dataset ds;
    corpus::QAPair p{"q", "p", {{"how", "WRB"}, {"is", "VBZ"}, {"it", "PRP"}, {"now", "RB"}},
                     {{"it", "PRP"}, {"is", "VBZ"}, {"good", "JJ"}, {"good", "NN"}, {"good", "JJ"}}};
    ds.pairs.push_back(p);
    const auto vocab = Vocab::build(ds);
    const auto table = model::decoder_tag_table(vocab, corpus::PosStatistics(ds));
    REQUIRE(table.size() == vocab.size());
    CHECK(table[Vocab::kPad] == Vocab::kPadTag);
    CHECK(table[Vocab::kStart] == Vocab::kStartTag);
    CHECK(table[Vocab::kEnd] == Vocab::kUnkTag);
    CHECK(table[Vocab::kUnk] == Vocab::kUnkTag);
    CHECK(table[vocab.word_id("good")] == vocab.tag_id("JJ"));
    CHECK(table[vocab.word_id("is")] == vocab.tag_id("VBZ"));
  }
}
