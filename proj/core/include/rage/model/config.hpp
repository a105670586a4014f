#pragma once

#include <cstddef>
#include <string>

namespace rage::model {

// Largest question/answer length; sizes the position table (rows 0..40, where
// row 0 is the position of the start symbol).
inline constexpr std::size_t kMaxSequence = 40;

struct ModelConfig {
  std::size_t dim = 300;
  std::size_t encoder_layers = 4;
  std::size_t decoder_layers = 4;
  std::size_t encoder_kernel = 2;
  std::size_t decoder_kernel = 4;
  bool use_pos = true;
  bool use_review = true;
  std::size_t vocab_size = 0;
  std::size_t tag_count = 0;

  // Throws kConfig on non-positive sizes.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace rage::model
