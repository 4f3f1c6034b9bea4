#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wlm/nnet/config.hpp"
#include "wlm/nnet/tensor.hpp"

namespace wlm::nn {

/// On-disk model. Layout (all integers little-endian):
///
///   "WLM1"                      magic
///   u32 format version (1)
///   u32 vocab_size, d_model, n_layers, n_heads, d_ff, max_len
///   f32 dropout
///   u64 vocab hash
///   u32 n_metadata, then per entry: u32 len + key bytes, u32 len + value bytes
///   u32 n_tensors, then per tensor:
///       u32 len + name bytes, u32 rank, u64 dims[rank], f32 data[product(dims)]
struct Checkpoint {
  ModelConfig config;
  std::uint64_t vocab_hash = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
  Params params;

  std::optional<std::string> meta(const std::string& key) const;
  void set_meta(const std::string& key, std::string value);

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wlm::nn
