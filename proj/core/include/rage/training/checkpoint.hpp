#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "rage/model/model.hpp"
#include "rage/training/trainer.hpp"

namespace rage::training {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  TrainConfig train;
  std::uint64_t vocab_hash = 0;
  std::size_t epoch = 0;
  double val_loss = 0.0;
  int precision = 32;  // bits of the stored parameter values
};

template <typename T>
struct LoadedCheckpoint {
  model::Model<T> model;
  CheckpointMeta meta;
};

/// JSON document:
///   {"format": "rage-checkpoint", "version": 1, "precision": 32|64,
///    "model": {...}, "train": {...}, "vocab_hash", "epoch", "val_loss",
///    "decoder_tags": [...],
///    "parameters": [{"name", "shape", "trainable", "values": [...]}]}
/// Values are written in shortest round-trip form, so a load at the same
/// precision restores every parameter bit for bit.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const model::Model<T>& model, const CheckpointMeta& meta);

// Reads a checkpoint at precision T (converting if it was stored at the
// other one). Throws kFormat on malformed or unknown-version files.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

extern template void save_checkpoint(const std::filesystem::path&, const model::Model<float>&, const CheckpointMeta&);
extern template void save_checkpoint(const std::filesystem::path&, const model::Model<double>&, const CheckpointMeta&);
extern template LoadedCheckpoint<float> load_checkpoint(const std::filesystem::path&);
extern template LoadedCheckpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace rage::training
