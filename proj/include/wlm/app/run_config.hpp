#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wlm/asr/noise.hpp"
#include "wlm/nnet/adam.hpp"
#include "wlm/nnet/config.hpp"
#include "wlm/warp/warp.hpp"

namespace wlm::app {

enum class Objective { Mlm, Wlm };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);  // "mlm" | "wlm"

/// Flat, typed run configuration. Text form: one "key = value" per line,
/// '#' starts a comment. Unknown keys and malformed values throw
/// std::invalid_argument with a one-line message naming the key.
struct RunConfig {
  Objective objective = Objective::Wlm;
  std::uint64_t seed = 1;

  // Warp overrides on top of the objective's preset.
  std::optional<double> warp_p_select;
  std::array<std::optional<double>, warp::kNumWarpOps> warp_proportions{};

  // Model: preset "desk" or "paper", then per-field overrides.
  std::string model_preset = "desk";
  std::optional<std::size_t> d_model, n_layers, n_heads, d_ff, max_len;
  std::optional<float> dropout;

  // Pretraining.
  nn::AdamConfig adam{};
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::size_t max_steps = 0;  // 0 = no limit

  // Fine-tuning.
  std::size_t ft_epochs = 30;
  std::size_t ft_batch_size = 16;
  double ft_lr = 1e-3;
  std::size_t ft_patience = 0;
  bool ft_freeze_encoder = false;

  // Data and outputs.
  std::string corpus, val_corpus, vocab, train, val, test, out_dir = "runs";
  std::size_t vocab_min_count = 1;
  std::size_t vocab_max_size = 30000;

  // ASR noise per split and experiment matrix.
  asr::NoiseConfig noise_train = asr::NoiseConfig::train();
  asr::NoiseConfig noise_test = asr::NoiseConfig::test();
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> settings{"clean-clean", "clean-noisy", "noisy-noisy"};

  warp::WarpConfig warp_config() const;
  nn::ModelConfig model_config(std::size_t vocab_size) const;

  /// Checks every derived config and the enumerations; throws on the first
  /// problem.
  void validate() const;

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_run_config(const RunConfig& cfg);

}  // namespace wlm::app
