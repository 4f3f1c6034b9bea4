#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wlm/core/rng.hpp"
#include "wlm/nnet/checkpoint.hpp"
#include "wlm/nnet/encoder.hpp"
#include "wlm/slu/utterance.hpp"
#include "wlm/text/vocab.hpp"

namespace wlm::slu {

/// Encoder plus two linear heads: intent from the CLS position, slot tag from
/// every token position. Head tensors live in the encoder's parameter store
/// under "slu.*" so that one optimizer and one checkpoint cover everything.
struct SluModel {
  nn::EncoderModel net;
  std::size_t intent_w = 0, intent_b = 0;
  std::size_t slot_w = 0, slot_b = 0;
  LabelSet intents;
  LabelSet tags;
};

/// Adds freshly initialized heads (weights N(0, 0.02^2), zero bias).
SluModel attach_heads(nn::EncoderModel encoder, LabelSet intents, LabelSet tags, std::uint64_t seed);

/// CLS-prefixed token batch with gold label indices. Labels that are unknown
/// to the model, and the CLS/pad rows, are -1.
struct SluBatch {
  nn::TokenBatch tokens;
  std::vector<std::int32_t> intent_gold;  // [batch]
  std::vector<std::int32_t> tag_gold;     // [batch * len]
};

/// Utterances longer than max_len - 1 tokens are truncated.
SluBatch encode_slu_batch(std::span<const TaggedUtterance> utterances, const text::Vocab& vocab,
                          const SluModel& model);

struct SluLogits {
  nn::Tensor intent;  // [batch, n_intents]
  nn::Tensor slot;    // [batch, len, n_tags]; row 0 of each sequence is CLS
};

/// Throws "missing CLS" unless every sequence starts with kCls.
SluLogits slu_forward(const SluModel& model, const nn::TokenBatch& tokens,
                      nn::BasicForwardCache<float>* cache = nullptr, Rng* dropout_rng = nullptr,
                      nn::Tensor* hidden_out = nullptr);

struct SluLoss {
  double total = 0.0;   // intent + slot
  double intent = 0.0;  // mean CE over utterances with a known intent
  double slot = 0.0;    // mean CE over token rows with a known tag
};

/// Equally weighted intent and slot cross-entropy. When `grad` is non-null it
/// receives dLoss/dlogits with the same shapes as `logits`.
SluLoss slu_loss(const SluLogits& logits, std::span<const std::int32_t> intent_gold,
                 std::span<const std::int32_t> tag_gold, SluLogits* grad = nullptr);

/// Forward, loss and backward through heads and encoder; gradients are
/// accumulated into `grads` (INS row frozen).
SluLoss slu_forward_backward(const SluModel& model, const SluBatch& batch, nn::Params& grads,
                             Rng* dropout_rng = nullptr);

/// Predicted intent and tags for each utterance (tokens copied from input).
SluDataset predict(const SluModel& model, const text::Vocab& vocab, const SluDataset& data,
                   std::size_t batch_size = 64);

nn::Checkpoint to_checkpoint(const SluModel& model, std::uint64_t vocab_hash);
SluModel from_checkpoint(const nn::Checkpoint& ckpt);

/// Encoder-only model from a pretrained checkpoint (extra tensors ignored).
nn::EncoderModel encoder_from_checkpoint(const nn::Checkpoint& ckpt);

}  // namespace wlm::slu
