#include "rage/model/config.hpp"

#include "rage/error.hpp"

namespace rage::model {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw Error(ErrorCode::kConfig, std::string(what) + " must be positive");
  };
  positive(dim, "dim");
  positive(encoder_layers, "encoder_layers");
  positive(decoder_layers, "decoder_layers");
  positive(encoder_kernel, "encoder_kernel");
  positive(decoder_kernel, "decoder_kernel");
  positive(vocab_size, "vocab_size");
  if (use_pos) positive(tag_count, "tag_count");
}

}  // namespace rage::model
