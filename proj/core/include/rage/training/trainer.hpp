#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "rage/model/config.hpp"
#include "rage/model/example.hpp"
#include "rage/model/model.hpp"

namespace rage::training {

struct TrainConfig {
  model::ModelConfig model;
  std::size_t batch_size = 64;
  double l2 = 0.001;
  double lr = 0.25;
  double momentum = 0.99;
  double clip = 5.0;  // global gradient norm; 0 disables clipping
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  std::uint64_t seed = 1;

  // Throws kConfig on out-of-range values.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct BatchLoss {
  double nll_sum = 0.0;  // summed token NLL
  std::size_t tokens = 0;
  double penalty = 0.0;

  double nll() const { return tokens ? nll_sum / static_cast<double>(tokens) : 0.0; }
  double total() const { return nll() + penalty; }
};

/// Regularized objective of a batch: mean per-token NLL (answer tokens plus
/// END) + l2 * sum of squared trainable parameters. Gradients of that
/// objective are accumulated into the parameters. Each example gets its own
/// graph, so no padding enters the mean.
template <typename T>
BatchLoss batch_loss(model::Model<T>& model, std::span<const model::Example<T>* const> batch, double l2);

// Mean per-token NLL over `examples` without gradients.
template <typename T>
double mean_nll(const model::Model<T>& model, std::span<const model::Example<T>> examples);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-token NLL over the epoch's batches
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

struct TrainOptions {
  std::ostream* log = nullptr;  // one JSON object per epoch
  std::optional<std::filesystem::path> checkpoint;  // rewritten on every improvement
  std::uint64_t vocab_hash = 0;
};

/// Epoch loop with Nesterov updates, gradient clipping and early stopping on
/// validation NLL. With no validation examples the training NLL is used for
/// selection. On return the model holds the best parameters. A non-finite
/// loss or gradient restores the best parameters and throws kDivergence.
template <typename T>
TrainResult train(model::Model<T>& model, std::span<const model::Example<T>> train_set,
                  std::span<const model::Example<T>> validation, const TrainConfig& config,
                  const TrainOptions& options = {});

extern template BatchLoss batch_loss(model::Model<float>&, std::span<const model::Example<float>* const>, double);
extern template BatchLoss batch_loss(model::Model<double>&, std::span<const model::Example<double>* const>, double);

}  // namespace rage::training
