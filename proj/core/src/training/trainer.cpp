#include "rage/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rage/error.hpp"
#include "rage/training/checkpoint.hpp"
#include "rage/training/optimizer.hpp"

namespace rage::training {

using model::Example;
using model::Model;
using numerics::Graph;

void TrainConfig::validate() const {
  model.validate();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (patience == 0) fail("patience must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) fail("l2 coefficient must be non-negative");
  if (!(clip >= 0.0) || !std::isfinite(clip)) fail("clip norm must be non-negative");
}

template <typename T>
BatchLoss batch_loss(Model<T>& model, std::span<const Example<T>* const> batch, double l2) {
  if (batch.empty()) throw Error(ErrorCode::kContractViolation, "empty batch");
  BatchLoss out;
  for (const auto* ex : batch) out.tokens += ex->tokens();
  const T inv_tokens = T{1} / static_cast<T>(out.tokens);
  for (const auto* ex : batch) {
    Graph<T> g;
    const auto log_probs = model.forward(g, ex->question, ex->answer, ex->review_ptr());
    std::vector<std::size_t> targets(ex->answer);
    targets.push_back(corpus::Vocabulary::kEnd);
    const auto nll = g.nll(log_probs, targets);
    out.nll_sum += static_cast<double>(g.value(nll)[0]);
    g.backward(g.scale(nll, inv_tokens));
  }
  out.penalty = l2_penalty(model.params(), l2);
  add_l2_gradient(model.params(), l2);
  return out;
}

template <typename T>
double mean_nll(const Model<T>& model, std::span<const Example<T>> examples) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyDataset, "no examples to evaluate");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& ex : examples) {
    const auto log_probs = model.log_probs(ex.question, ex.answer, ex.review_ptr());
    for (std::size_t j = 0; j < ex.answer.size(); ++j) total -= static_cast<double>(log_probs(j, ex.answer[j]));
    total -= static_cast<double>(log_probs(ex.answer.size(), corpus::Vocabulary::kEnd));
    tokens += ex.tokens();
  }
  return total / static_cast<double>(tokens);
}

namespace {

// Similar answer lengths share a batch; order within a length and the order
// of batches are shuffled per epoch.
template <typename T>
std::vector<std::vector<const Example<T>*>> make_batches(std::span<const Example<T>> examples, std::size_t batch_size,
                                                         std::mt19937_64& rng) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return examples[a].tokens() < examples[b].tokens(); });
  std::vector<std::vector<const Example<T>*>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    auto& batch = batches.emplace_back();
    for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) batch.push_back(&examples[order[j]]);
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

template <typename T>
std::vector<numerics::Tensor<T>> snapshot(const Model<T>& model) {
  std::vector<numerics::Tensor<T>> out;
  for (const auto& p : model.params()) {
    if (p->trainable) out.push_back(p->tensor);
  }
  return out;
}

template <typename T>
void restore(Model<T>& model, const std::vector<numerics::Tensor<T>>& saved) {
  std::size_t i = 0;
  for (auto& p : model.params()) {
    if (p->trainable) p->tensor = saved[i++];
  }
}

}  // namespace

template <typename T>
TrainResult train(Model<T>& model, std::span<const Example<T>> train_set, std::span<const Example<T>> validation,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorCode::kEmptyDataset, "no training examples");
  Nesterov<T> optimizer(static_cast<T>(config.lr), static_cast<T>(config.momentum));
  std::mt19937_64 rng(config.seed);
  TrainResult result;
  auto best = snapshot(model);
  bool have_best = false;
  std::size_t since_best = 0;

  auto diverged = [&](const std::string& message) {
    restore(model, best);
    throw Error(ErrorCode::kDivergence, message);
  };
  // Non-finite parameters surface as kNumericInput from the kernels.
  auto guarded = [&](auto&& compute, const std::string& where) {
    try {
      return compute();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumericInput) throw;
      diverged("training diverged at " + where + ": " + e.what());
    }
    return decltype(compute())();
  };

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double nll_sum = 0.0;
    std::size_t tokens = 0;
    const auto batches = make_batches(train_set, config.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const std::string where = "epoch " + std::to_string(epoch) + " batch " + std::to_string(b);
      model.params().zero_grads();
      const auto loss = guarded([&] { return batch_loss<T>(model, batches[b], config.l2); }, where);
      const double norm = clip_gradients(model.params(), config.clip);
      if (!std::isfinite(loss.total()) || !std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "training diverged at " << where << ": loss " << loss.total() << ", gradient norm " << norm;
        diverged(msg.str());
      }
      optimizer.step(model.params());
      nll_sum += loss.nll_sum;
      tokens += loss.tokens;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = nll_sum / static_cast<double>(tokens);
    entry.val_loss = guarded(
        [&] { return validation.empty() ? mean_nll<T>(model, train_set) : mean_nll<T>(model, validation); },
        "validation of epoch " + std::to_string(epoch));
    if (!std::isfinite(entry.val_loss)) diverged("validation loss is not finite at epoch " + std::to_string(epoch));
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(entry);
    if (options.log) {
      nlohmann::json line = {{"epoch", entry.epoch},
                             {"train_loss", entry.train_loss},
                             {"val_loss", entry.val_loss},
                             {"seconds", entry.seconds}};
      *options.log << line.dump() << '\n' << std::flush;
    }

    if (!have_best || entry.val_loss < result.best_val_loss) {
      have_best = true;
      since_best = 0;
      result.best_epoch = epoch;
      result.best_val_loss = entry.val_loss;
      best = snapshot(model);
      if (options.checkpoint) {
        CheckpointMeta meta{config, options.vocab_hash, epoch, entry.val_loss, static_cast<int>(sizeof(T) * 8)};
        save_checkpoint(*options.checkpoint, model, meta);
      }
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  restore(model, best);
  return result;
}

#define RAGE_INSTANTIATE_TRAINER(T)                                                                          \
  template BatchLoss batch_loss(Model<T>&, std::span<const Example<T>* const>, double);                      \
  template double mean_nll(const Model<T>&, std::span<const Example<T>>);                                    \
  template TrainResult train(Model<T>&, std::span<const Example<T>>, std::span<const Example<T>>,            \
                             const TrainConfig&, const TrainOptions&);

RAGE_INSTANTIATE_TRAINER(float)
RAGE_INSTANTIATE_TRAINER(double)
#undef RAGE_INSTANTIATE_TRAINER

}  // namespace rage::training
