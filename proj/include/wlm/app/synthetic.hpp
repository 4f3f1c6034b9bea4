#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wlm/slu/utterance.hpp"

namespace wlm::app {

/// Split sizes default to the reference ATIS split.
struct SyntheticSizes {
  std::size_t train = 4478;
  std::size_t val = 500;
  std::size_t test = 893;
};

struct SluTask {
  slu::SluDataset train, val, test;
};

/// Air-travel template grammar: several intents, multi-token slot fillers
/// (cities, airlines, dates), optional modifiers. Deterministic in `seed`.
slu::TaggedUtterance synthetic_utterance(std::uint64_t seed);
SluTask synthetic_slu_task(const SyntheticSizes& sizes, std::uint64_t seed);

/// Unlabelled sentences from the same grammar, one per line.
std::vector<std::string> synthetic_corpus(std::size_t n_sentences, std::uint64_t seed);

/// All surface words the grammar can emit.
std::vector<std::string> synthetic_lexicon();

}  // namespace wlm::app
