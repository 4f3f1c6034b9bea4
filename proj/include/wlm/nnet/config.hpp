#pragma once

#include <cstddef>
#include <cstdint>

namespace wlm::nn {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 64;
  float dropout = 0.1f;

  /// d_model 64, 2 layers, 4 heads, d_ff 256, max_len 64.
  static ModelConfig desk(std::size_t vocab_size);
  /// d_model 512, 12 layers, 16 heads, d_ff 2048, max_len 512.
  static ModelConfig paper(std::size_t vocab_size);

  std::size_t head_dim() const { return d_model / n_heads; }

  /// Throws std::invalid_argument on zero sizes, d_model % n_heads != 0, or a
  /// vocabulary that cannot hold the special tokens.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Closed-form trainable parameter count of the encoder with its LM head.
std::uint64_t param_count(const ModelConfig& config);

}  // namespace wlm::nn
