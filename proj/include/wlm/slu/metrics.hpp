#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wlm/slu/utterance.hpp"

namespace wlm::slu {

/// A maximal labelled span [start, end] (inclusive) of one slot type.
struct Chunk {
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const Chunk&) const = default;
};

/// CoNLL chunking: a chunk opens at B-X, or at I-X that does not continue an
/// X chunk, and extends over following I-X tags.
std::vector<Chunk> extract_chunks(std::span<const std::string> tags);

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// Span-level precision/recall/F1 pooled over all sequences. With no gold and
/// no predicted chunks every score is 1; any other empty denominator gives 0.
PrfScore conll_f1(std::span<const std::vector<std::string>> gold,
                  std::span<const std::vector<std::string>> predicted);

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> predicted);

/// Fraction of utterances whose full tag sequence is correct.
double tag_sequence_accuracy(std::span<const std::vector<std::string>> gold,
                             std::span<const std::vector<std::string>> predicted);

/// Fraction of utterances with the intent and every tag correct.
double joint_accuracy(std::span<const std::string> gold_intents,
                      std::span<const std::string> predicted_intents,
                      std::span<const std::vector<std::string>> gold_tags,
                      std::span<const std::vector<std::string>> predicted_tags);

struct SluMetrics {
  double intent_accuracy = 0.0;
  double slot_f1 = 0.0;
  double joint_accuracy = 0.0;

  bool operator==(const SluMetrics&) const = default;
};

/// All three metrics; `predicted` must mirror `gold` utterance by utterance.
SluMetrics evaluate_predictions(const SluDataset& gold, const SluDataset& predicted);

}  // namespace wlm::slu
