#pragma once

#include "wlm/core/rng.hpp"
#include "wlm/text/vocab.hpp"

namespace wlm::asr {

/// Per-token deletion/substitution and per-gap insertion probabilities. Gaps
/// are the positions before each reference token, so the sentence start
/// counts and a length-n sentence has n gaps.
struct NoiseConfig {
  double p_sub = 0.0;
  double p_del = 0.0;
  double p_ins = 0.0;

  /// Rates matching the train/validation split of the reference ASR data.
  static NoiseConfig train() { return {0.129, 0.024, 0.033}; }
  static NoiseConfig test() { return {0.115, 0.015, 0.029}; }

  void validate() const;  // each probability in [0, 1)
  bool operator==(const NoiseConfig&) const = default;
};

/// Simulated ASR channel. Each reference token is deleted with p_del,
/// otherwise substituted with p_sub by a different uniformly drawn
/// non-special token, otherwise kept. Throws on special input ids.
text::TokenIds corrupt(std::span<const text::TokenId> tokens, const NoiseConfig& cfg,
                       const text::Vocab& vocab, Rng& rng);

}  // namespace wlm::asr
