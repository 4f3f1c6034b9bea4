#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wlm/nnet/adam.hpp"
#include "wlm/nnet/checkpoint.hpp"
#include "wlm/nnet/encoder.hpp"
#include "wlm/text/corpus.hpp"
#include "wlm/warp/warp.hpp"

namespace wlm::app {

struct PretrainConfig {
  warp::WarpConfig warp = warp::WarpConfig::wlm();
  nn::ModelConfig model;
  nn::AdamConfig adam{};
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::size_t max_steps = 0;  // 0 = no limit
  std::uint64_t seed = 1;
};

/// Epoch 0 is the untrained model; its train_loss is NaN.
struct PretrainEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_perplexity = 0.0;
  double val_accuracy = 0.0;
  std::size_t steps = 0;  // optimizer steps so far
};

struct PretrainResult {
  nn::EncoderModel model;
  nn::EncoderModel initial;
  std::vector<PretrainEpoch> history;
  std::size_t steps = 0;
};

struct LmEval {
  double nll = 0.0;  // mean over predicted positions
  double perplexity = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

/// Warped examples for a slice of sentences, packed into a batch. Sentences
/// are cut to max_len before warping and the warped rows again after it.
struct LmBatch {
  nn::TokenBatch tokens;
  std::vector<text::TokenId> labels;
  std::vector<std::uint8_t> mask;
  std::size_t predictions = 0;
};

LmBatch make_lm_batch(std::span<const text::TokenIds> sentences, std::span<const std::uint64_t> seeds,
                      const warp::WarpConfig& warp, const text::Vocab& vocab, std::size_t max_len);

/// Validation loss under a fixed warp seed, so epochs are comparable.
LmEval evaluate_lm(const nn::EncoderModel& model, const text::Corpus& corpus, const warp::WarpConfig& warp,
                   const text::Vocab& vocab, std::uint64_t seed, std::size_t batch_size = 64);

using PretrainCallback = std::function<void(const PretrainEpoch&)>;

/// Throws "divergence" (from the optimizer) on non-finite gradients.
PretrainResult pretrain(const text::Corpus& train, const text::Corpus& val, const text::Vocab& vocab,
                        const PretrainConfig& cfg, const PretrainCallback& on_epoch = {});

/// JSON line {epoch, train_loss, val_perplexity, val_accuracy}; NaN becomes null.
std::string pretrain_epoch_json(const PretrainEpoch& e);

}  // namespace wlm::app
