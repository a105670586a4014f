#include "rage/training/checkpoint.hpp"

#include <fstream>

#include "json.hpp"
#include "rage/error.hpp"

namespace rage::training {

using nlohmann::json;

namespace {

json model_json(const model::ModelConfig& c) {
  return {{"dim", c.dim},
          {"encoder_layers", c.encoder_layers},
          {"decoder_layers", c.decoder_layers},
          {"encoder_kernel", c.encoder_kernel},
          {"decoder_kernel", c.decoder_kernel},
          {"use_pos", c.use_pos},
          {"use_review", c.use_review},
          {"vocab_size", c.vocab_size},
          {"tag_count", c.tag_count}};
}

model::ModelConfig model_from(const json& j) {
  model::ModelConfig c;
  c.dim = j.at("dim").get<std::size_t>();
  c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
  c.encoder_kernel = j.at("encoder_kernel").get<std::size_t>();
  c.decoder_kernel = j.at("decoder_kernel").get<std::size_t>();
  c.use_pos = j.at("use_pos").get<bool>();
  c.use_review = j.at("use_review").get<bool>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.tag_count = j.at("tag_count").get<std::size_t>();
  return c;
}

json train_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"l2", c.l2},
          {"lr", c.lr},                 {"momentum", c.momentum},
          {"clip", c.clip},             {"max_epochs", c.max_epochs},
          {"patience", c.patience},     {"seed", c.seed}};
}

TrainConfig train_from(const json& j, const model::ModelConfig& m) {
  TrainConfig c;
  c.model = m;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.l2 = j.at("l2").get<double>();
  c.lr = j.at("lr").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.clip = j.at("clip").get<double>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const model::Model<T>& model, const CheckpointMeta& meta) {
  json params = json::array();
  for (const auto& p : model.params()) {
    const auto values = p->tensor.values();
    params.push_back({{"name", p->name},
                      {"shape", p->tensor.shape()},
                      {"trainable", p->trainable},
                      {"values", std::vector<T>(values.begin(), values.end())}});
  }
  const json doc = {{"format", "rage-checkpoint"},
                    {"version", kCheckpointVersion},
                    {"precision", static_cast<int>(sizeof(T) * 8)},
                    {"model", model_json(model.config())},
                    {"train", train_json(meta.train)},
                    {"vocab_hash", meta.vocab_hash},
                    {"epoch", meta.epoch},
                    {"val_loss", meta.val_loss},
                    {"decoder_tags", model.decoder_tags()},
                    {"parameters", std::move(params)}};
  // Write then rename so an interrupted save never clobbers the last good file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << doc.dump() << '\n';
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    const json doc = json::parse(in);
    if (doc.at("format").get<std::string>() != "rage-checkpoint") {
      throw Error(ErrorCode::kFormat, path.string() + ": not a checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorCode::kFormat, path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto config = model_from(doc.at("model"));
    CheckpointMeta meta;
    meta.train = train_from(doc.at("train"), config);
    meta.vocab_hash = doc.at("vocab_hash").get<std::uint64_t>();
    meta.epoch = doc.at("epoch").get<std::size_t>();
    meta.val_loss = doc.at("val_loss").get<double>();
    meta.precision = doc.at("precision").get<int>();
    if (meta.precision != 32 && meta.precision != 64) {
      throw Error(ErrorCode::kFormat, path.string() + ": precision must be 32 or 64");
    }

    numerics::ParameterSet<T> params;
    for (const auto& p : doc.at("parameters")) {
      std::vector<T> values;
      if (meta.precision == 32) {
        const auto stored = p.at("values").get<std::vector<float>>();
        values.assign(stored.begin(), stored.end());
      } else {
        const auto stored = p.at("values").get<std::vector<double>>();
        values.assign(stored.begin(), stored.end());
      }
      params.add(p.at("name").get<std::string>(),
                 numerics::Tensor<T>(p.at("shape").get<numerics::Shape>(), std::move(values)),
                 p.at("trainable").get<bool>());
    }
    auto tags = doc.at("decoder_tags").get<std::vector<std::size_t>>();
    return {model::Model<T>(config, std::move(params), std::move(tags)), meta};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

template void save_checkpoint(const std::filesystem::path&, const model::Model<float>&, const CheckpointMeta&);
template void save_checkpoint(const std::filesystem::path&, const model::Model<double>&, const CheckpointMeta&);
template LoadedCheckpoint<float> load_checkpoint(const std::filesystem::path&);
template LoadedCheckpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace rage::training
