#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "rage/error.hpp"
#include "rage/training/checkpoint.hpp"
#include "rage/training/optimizer.hpp"
#include "rage/training/trainer.hpp"

using namespace rage;
using namespace rage::training;
using model::Example;
using numerics::Tensor;

namespace {

template <typename T>
std::vector<Example<T>> random_examples(std::size_t n, std::uint64_t seed, bool review) {
  std::vector<Example<T>> out;
  for (std::size_t i = 0; i < n; ++i) {
    Example<T> ex;
    ex.pair_id = "ex" + std::to_string(i);
    ex.question = testing::random_tokens(3 + i % 4, 20, 5, seed * 100 + i);
    ex.answer = testing::random_tokens(2 + i % 5, 20, 5, seed * 100 + 50 + i).words;
    if (review) ex.review = testing::random_matrix<T>(3, 8, seed * 100 + 75 + i);
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
std::vector<const Example<T>*> pointers(const std::vector<Example<T>>& v) {
  std::vector<const Example<T>*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

TrainConfig small_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.lr = 0.05;
  c.momentum = 0.9;
  c.l2 = 0.0;
  c.max_epochs = 4;
  c.patience = 2;
  return c;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("nesterov update recurrence") {
    // Quadratic loss theta^2 / 2, so g = theta.
    std::vector<double> theta{1.0}, v{0.0};
    for (int step = 0; step < 2; ++step) {
      const std::vector<double> g{theta[0]};
      nesterov_update<double>(theta, g, v, 0.1, 0.9);
    }
    CHECK(theta[0] == doctest::Approx(0.5751).epsilon(1e-12));

    // Explicit recurrence for a few random steps.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    std::vector<double> t{0.3, -1.2}, vel{0.0, 0.0};
    std::vector<double> t_ref = t, v_ref = vel;
    for (int step = 0; step < 5; ++step) {
      const std::vector<double> g{normal(rng), normal(rng)};
      nesterov_update<double>(t, g, vel, 0.2, 0.7);
      for (std::size_t i = 0; i < 2; ++i) {
        v_ref[i] = 0.7 * v_ref[i] - 0.2 * g[i];
        t_ref[i] = t_ref[i] + 0.7 * v_ref[i] - 0.2 * g[i];
        CHECK(t[i] == doctest::Approx(t_ref[i]).epsilon(1e-14));
        CHECK(vel[i] == doctest::Approx(v_ref[i]).epsilon(1e-14));
      }
    }

    std::vector<double> plain{2.0}, pv{0.0};
    nesterov_update<double>(plain, std::vector<double>{0.5}, pv, 0.1, 0.0);
    CHECK(plain[0] == doctest::Approx(1.95));
    std::vector<double> still{2.0}, sv{0.0};
    nesterov_update<double>(still, std::vector<double>{0.0}, sv, 0.1, 0.9);
    CHECK(still[0] == 2.0);
  }

  TEST_CASE("optimizer skips frozen parameters and keeps velocities by name") {
    numerics::ParameterSet<double> params;
    auto& a = params.add("a", Tensor<double>::matrix(1, 2, 1.0));
    auto& frozen = params.add("frozen", Tensor<double>::matrix(1, 1, 1.0), false);
    a.tensor.grad()[0] = 1.0;
    a.tensor.grad()[1] = -1.0;
    frozen.tensor.grad()[0] = 1.0;
    Nesterov<double> opt(0.1, 0.5);
    opt.step(params);
    CHECK(a.tensor[0] == doctest::Approx(1.0 + 0.5 * -0.1 - 0.1));
    CHECK(a.tensor[1] == doctest::Approx(1.0 + 0.5 * 0.1 + 0.1));
    CHECK(frozen.tensor[0] == 1.0);
    REQUIRE(opt.velocity("a") != nullptr);
    CHECK((*opt.velocity("a"))[0] == doctest::Approx(-0.1));
    CHECK(opt.velocity("frozen") == nullptr);
  }

  TEST_CASE("l2 penalty, gradient and clipping") {
    numerics::ParameterSet<double> params;
    auto& a = params.add("a", Tensor<double>({1, 3}, {1.0, -2.0, 3.0}));
    params.add("frozen", Tensor<double>({1, 1}, {10.0}), false);
    CHECK(l2_penalty(params, 0.01) == doctest::Approx(0.14));
    params.zero_grads();
    add_l2_gradient(params, 0.01);
    CHECK(a.tensor.grad()[0] == doctest::Approx(0.02));
    CHECK(a.tensor.grad()[1] == doctest::Approx(-0.04));
    CHECK(a.tensor.grad()[2] == doctest::Approx(0.06));

    a.tensor.grad()[0] = 3.0;
    a.tensor.grad()[1] = 4.0;
    a.tensor.grad()[2] = 0.0;
    CHECK(gradient_norm(params) == doctest::Approx(5.0));
    CHECK(clip_gradients(params, 10.0) == doctest::Approx(5.0));
    CHECK(a.tensor.grad()[0] == 3.0);
    CHECK(clip_gradients(params, 1.0) == doctest::Approx(5.0));
    CHECK(a.tensor.grad()[0] == doctest::Approx(0.6));
    CHECK(a.tensor.grad()[1] == doctest::Approx(0.8));
    CHECK(gradient_norm(params) == doctest::Approx(1.0));
  }

  TEST_CASE("uniform output gives ln V per token") {
    auto m = testing::tiny_model<double>();
    for (auto& v : m.params().at("dec.out.weight").tensor.values()) v = 0.0;
    for (auto& v : m.params().at("dec.out.bias").tensor.values()) v = 0.0;
    const auto examples = random_examples<double>(5, 1, true);
    const auto batch = pointers(examples);
    m.params().zero_grads();
    const auto loss = batch_loss<double>(m, batch, 0.0);
    std::size_t tokens = 0;
    for (const auto& e : examples) tokens += e.answer.size() + 1;
    CHECK(loss.tokens == tokens);
    CHECK(loss.nll() == doctest::Approx(std::log(20.0)).epsilon(1e-12));
    CHECK(mean_nll<double>(m, examples) == doctest::Approx(std::log(20.0)).epsilon(1e-12));
  }

  TEST_CASE("batch objective matches its definition and its gradient") {
    auto m = testing::tiny_model<double>({.seed = 5});
    const auto examples = random_examples<double>(3, 2, true);
    const auto batch = pointers(examples);
    const double l2 = 0.003;

    auto objective = [&] {
      double nll = 0.0;
      std::size_t tokens = 0;
      for (const auto& e : examples) {
        const auto lp = m.log_probs(e.question, e.answer, e.review_ptr());
        for (std::size_t j = 0; j <= e.answer.size(); ++j) {
          nll -= lp(j, j < e.answer.size() ? e.answer[j] : corpus::Vocabulary::kEnd);
        }
        tokens += e.answer.size() + 1;
      }
      double penalty = 0.0;
      for (const auto& p : m.params()) {
        if (!p->trainable) continue;
        for (double v : p->tensor.values()) penalty += v * v;
      }
      return nll / static_cast<double>(tokens) + l2 * penalty;
    };

    m.params().zero_grads();
    const auto loss = batch_loss<double>(m, batch, l2);
    CHECK(loss.total() == doctest::Approx(objective()).epsilon(1e-12));

    // Central differences on a sample of entries from every trainable parameter.
    double worst = 0.0;
    for (auto& p : m.params()) {
      if (!p->trainable) continue;
      const std::size_t stride = std::max<std::size_t>(1, p->tensor.size() / 7);
      for (std::size_t i = 0; i < p->tensor.size(); i += stride) {
        const double saved = p->tensor[i];
        p->tensor[i] = saved + 1e-5;
        const double up = objective();
        p->tensor[i] = saved - 1e-5;
        const double down = objective();
        p->tensor[i] = saved;
        const double fd = (up - down) / 2e-5;
        worst = std::max(worst, std::abs(fd - p->tensor.grad()[i]) / std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("training lowers the loss and is deterministic") {
    auto run = [](std::uint64_t seed) {
      auto m = testing::tiny_model<float>({.seed = 7});
      const auto train_set = random_examples<float>(12, 3, true);
      auto config = small_config();
      config.model = m.config();
      config.seed = seed;
      std::ostringstream log;
      TrainOptions options;
      options.log = &log;
      const auto result = train<float>(m, train_set, {}, config, options);
      return std::tuple{std::move(m), result, log.str()};
    };
    const auto [a, ra, log_a] = run(1);
    const auto [b, rb, log_b] = run(1);
    const auto [c, rc, log_c] = run(2);
    for (const auto& p : a.params()) CHECK(p->tensor == b.params().at(p->name).tensor);
    REQUIRE(ra.history.size() == rb.history.size());
    for (std::size_t i = 0; i < ra.history.size(); ++i) CHECK(ra.history[i].val_loss == rb.history[i].val_loss);
    CHECK(ra.history.back().train_loss < ra.history.front().train_loss);
    CHECK(rc.history.front().train_loss != ra.history.front().train_loss);

    // One JSON line per epoch.
    std::istringstream lines(log_a);
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.at("epoch").get<std::size_t>() == ++count);
      CHECK(j.contains("train_loss"));
      CHECK(j.contains("val_loss"));
      CHECK(j.contains("seconds"));
    }
    CHECK(count == ra.history.size());
    // The frozen word table never moves.
    const auto fresh = testing::tiny_model<float>({.seed = 7});
    CHECK(a.params().at("embed.word").tensor == fresh.params().at("embed.word").tensor);
    CHECK(a.params().at("embed.position").tensor != fresh.params().at("embed.position").tensor);
  }

  TEST_CASE("early stopping keeps the best validation parameters") {
    auto m = testing::tiny_model<double>({.seed = 8});
    const auto train_set = random_examples<double>(8, 4, false);
    const auto validation = random_examples<double>(4, 9, false);
    auto config = small_config();
    config.model = m.config();
    config.lr = 0.3;
    config.max_epochs = 25;
    config.patience = 2;
    const auto result = train<double>(m, train_set, validation, config);
    double best = INFINITY;
    std::size_t best_epoch = 0;
    for (const auto& e : result.history) {
      if (e.val_loss < best) {
        best = e.val_loss;
        best_epoch = e.epoch;
      }
    }
    CHECK(result.best_epoch == best_epoch);
    CHECK(result.best_val_loss == best);
    CHECK(mean_nll<double>(m, validation) == result.best_val_loss);
    if (result.history.size() < config.max_epochs) CHECK(result.history.size() == best_epoch + config.patience);
  }

  TEST_CASE("divergence restores parameters and reports") {
    auto m = testing::tiny_model<double>({.seed = 9});
    const auto before = m.params().at("dec.out.weight").tensor;
    const auto train_set = random_examples<double>(4, 5, false);
    auto config = small_config();
    config.model = m.config();
    config.lr = 1e300;
    config.momentum = 0.0;
    config.clip = 0.0;
    try {
      train<double>(m, train_set, {}, config);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDivergence);
    }
    CHECK(m.params().at("dec.out.weight").tensor == before);
  }

  TEST_CASE("configuration validation") {
    TrainConfig c = small_config();
    c.model.dim = 8;
    c.model.vocab_size = 20;
    c.model.tag_count = 5;
    CHECK_NOTHROW(c.validate());
    for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
             [](TrainConfig& t) { t.batch_size = 0; }, [](TrainConfig& t) { t.lr = 0.0; },
             [](TrainConfig& t) { t.momentum = 1.0; }, [](TrainConfig& t) { t.l2 = -1.0; },
             [](TrainConfig& t) { t.patience = 0; }, [](TrainConfig& t) { t.max_epochs = 0; }}) {
      auto bad = c;
      mutate(bad);
      CHECK_THROWS_AS(bad.validate(), Error);
    }
  }

  TEST_CASE("checkpoints round trip exactly") {
    auto m = testing::tiny_model<float>({.seed = 10});
    const auto path = temp_file("rage_unit_ckpt.json");
    CheckpointMeta meta;
    meta.train = small_config();
    meta.train.model = m.config();
    meta.vocab_hash = 0xfeedbeefcafe1234ULL;
    meta.epoch = 3;
    meta.val_loss = 1.0 / 3.0;
    save_checkpoint(path, m, meta);
    const auto loaded = load_checkpoint<float>(path);
    CHECK(loaded.meta.vocab_hash == meta.vocab_hash);
    CHECK(loaded.meta.epoch == 3);
    CHECK(loaded.meta.val_loss == meta.val_loss);
    CHECK(loaded.meta.train == meta.train);
    CHECK(loaded.meta.precision == 32);
    CHECK(loaded.model.config() == m.config());
    CHECK(loaded.model.decoder_tags() == m.decoder_tags());
    REQUIRE(loaded.model.params().size() == m.params().size());
    for (const auto& p : m.params()) {
      const auto& q = loaded.model.params().at(p->name);
      CHECK(q.tensor == p->tensor);
      CHECK(q.trainable == p->trainable);
    }
    const auto examples = random_examples<float>(3, 6, true);
    CHECK(mean_nll<float>(loaded.model, examples) == mean_nll<float>(m, examples));

    auto d = testing::tiny_model<double>({.seed = 10});
    save_checkpoint(path, d, {meta.train, 1, 1, 0.5, 64});
    const auto dl = load_checkpoint<double>(path);
    for (const auto& p : d.params()) CHECK(dl.model.params().at(p->name).tensor == p->tensor);
    CHECK(load_checkpoint<float>(path).model.params().size() == d.params().size());
  }

  TEST_CASE("malformed checkpoints are rejected") {
    const auto path = temp_file("rage_unit_bad_ckpt.json");
    auto expect_format = [&](const std::string& text) {
      std::ofstream(path) << text;
      try {
        load_checkpoint<float>(path);
        FAIL("accepted: " << text);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kFormat);
      }
    };
    expect_format("{not json");
    expect_format(R"({"format":"something-else","version":1})");
    expect_format(R"({"format":"rage-checkpoint","version":99})");

    auto m = testing::tiny_model<float>();
    save_checkpoint(path, m, {small_config(), 0, 0, 0.0, 32});
    auto doc = nlohmann::json::parse(std::ifstream(path));
    doc["parameters"][0]["values"].erase(0);
    std::ofstream(path) << doc.dump();
    CHECK_THROWS_AS(load_checkpoint<float>(path), Error);
    CHECK_THROWS_AS(load_checkpoint<float>(temp_file("rage_missing_ckpt.json")), Error);
  }
}
