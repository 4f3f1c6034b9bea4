#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wlm/asr/align.hpp"
#include "wlm/asr/noise.hpp"
#include "wlm/slu/utterance.hpp"

namespace wlm::asr {

/// Projects reference tags onto the hypothesis: aligned (match/sub) tokens
/// take the reference tag, inserted tokens get "O", then the IOB repair pass
/// runs. `hyp_tokens` become the output tokens; the intent is copied.
slu::TaggedUtterance transfer_labels(const slu::TaggedUtterance& ref,
                                     std::span<const std::string> hyp_tokens, const Alignment& ops);

struct NoisyUtterance {
  std::size_t id = 0;
  Alignment ops;  // aligns the clean token ids with the noisy ones
  AlignmentStats stats;
  bool fully_deleted = false;  // replaced by a single "[UNK]" token
};

struct NoisySet {
  slu::SluDataset data;
  std::vector<NoisyUtterance> records;
  AlignmentStats total;
  std::size_t fully_deleted = 0;
};

/// Corrupts every utterance (stream derived from `seed` and the utterance
/// index), aligns it to the clean ids and transfers labels. Hypothesis tokens
/// on match ops keep the reference surface form.
NoisySet make_noisy_slu_set(const slu::SluDataset& clean, const NoiseConfig& cfg,
                            const text::Vocab& vocab, std::uint64_t seed);

/// Sidecar JSON: {"total": stats, "fully_deleted": n, "utterances": [{utterance_id, ops, stats}]}.
std::string noisy_sidecar_json(const NoisySet& set);
void write_noisy_sidecar(const std::filesystem::path& path, const NoisySet& set);

}  // namespace wlm::asr
