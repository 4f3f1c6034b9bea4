#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wlm/core/rng.hpp"
#include "wlm/nnet/config.hpp"
#include "wlm/nnet/tensor.hpp"
#include "wlm/text/vocab.hpp"

namespace wlm::nn {

using text::TokenId;
using text::TokenIds;

/// Right-padded batch of token sequences.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<TokenId> ids;         // [batch * len]
  std::vector<std::uint8_t> valid;  // 1 for real tokens, 0 for padding

  /// Pads every sequence with kPad to the longest length.
  static TokenBatch pack(std::span<const TokenIds> sequences);

  std::size_t rows() const noexcept { return batch * len; }
};

struct LayerSlots {
  std::size_t ln1_gain, ln1_bias;
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln2_gain, ln2_bias;
  std::size_t w1, b1, w2, b2;
};

/// Indices of the encoder tensors inside a parameter store.
struct EncoderSlots {
  std::size_t tok_emb = 0;
  std::size_t pos_emb = 0;
  std::vector<LayerSlots> layers;
  std::size_t lnf_gain = 0, lnf_bias = 0;
  std::size_t out_bias = 0;
};

/// Pre-norm transformer encoder with learned positions and an LM head tied to
/// the token embedding. The parameter store may carry extra tensors (task
/// heads) after the encoder's own.
template <class T>
struct BasicEncoderModel {
  ModelConfig config;
  BasicParams<T> params;
  EncoderSlots slots;

  template <class U>
  BasicEncoderModel<U> cast() const {
    return BasicEncoderModel<U>{config, params.template cast<U>(), slots};
  }
};

using EncoderModel = BasicEncoderModel<float>;

/// Registers the encoder tensors (names "encoder.*", "lm.out_bias") in order.
template <class T>
EncoderSlots register_encoder_params(BasicParams<T>& params, const ModelConfig& config);

/// Looks up encoder tensors by name and checks their shapes against config.
template <class T>
EncoderSlots bind_encoder_slots(const BasicParams<T>& params, const ModelConfig& config);

/// Weights and embeddings ~ N(0, 0.02^2); biases 0; layer-norm gains 1.
EncoderModel init_model(const ModelConfig& config, std::uint64_t seed);

/// Activations retained by forward() for the backward pass.
template <class T>
struct BasicLayerCache {
  std::vector<T> x_in, ln1_xhat, ln1_rstd, h1, q, k, v, probs, ctx, drop_attn;
  std::vector<T> x_mid, ln2_xhat, ln2_rstd, h2, ff_pre, ff_act, drop_ff;
};

template <class T>
struct BasicForwardCache {
  std::vector<T> drop_embed;
  std::vector<BasicLayerCache<T>> layers;
  std::vector<T> x_final, lnf_xhat, lnf_rstd;
};

/// Runs the encoder. Dropout is applied only when `dropout_rng` is non-null
/// and config.dropout > 0. Returns hidden states [batch, len, d_model].
template <class T>
BasicTensor<T> encoder_forward(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                               BasicForwardCache<T>* cache = nullptr, Rng* dropout_rng = nullptr);

/// Accumulates parameter gradients given dL/dhidden.
template <class T>
void encoder_backward(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                      const BasicForwardCache<T>& cache, std::span<const T> d_hidden,
                      BasicParams<T>& grads);

/// hidden [B, L, D] -> logits [B, L, V] = hidden * tok_emb^T + out_bias.
template <class T>
BasicTensor<T> lm_logits(const BasicEncoderModel<T>& model, const BasicTensor<T>& hidden);

/// Accumulates tok_emb/out_bias gradients and returns dL/dhidden.
template <class T>
std::vector<T> lm_logits_backward(const BasicEncoderModel<T>& model, const BasicTensor<T>& hidden,
                                  std::span<const T> d_logits, BasicParams<T>& grads);

struct LmLossResult {
  double loss = 0.0;      // mean NLL over predicted positions
  double accuracy = 0.0;  // argmax == label over predicted positions
  std::size_t count = 0;  // number of predicted positions
};

/// Masked cross-entropy over rows of `logits` ([rows, vocab]). If d_logits is
/// non-null it receives dLoss/dlogits (zero on unpredicted rows). Throws
/// "no predictions in batch" when the mask is all zero.
template <class T>
LmLossResult lm_loss(std::span<const T> logits, std::size_t vocab, std::span<const TokenId> labels,
                     std::span<const std::uint8_t> predict_mask, std::vector<T>* d_logits = nullptr);

/// Zeroes the INS row of the token-embedding gradient. With tied embeddings
/// this removes both the input and the output-projection contributions.
template <class T>
void freeze_ins_gradient(const BasicEncoderModel<T>& model, BasicParams<T>& grads);

/// (parameter index, row) pairs that the optimizer must leave untouched.
template <class T>
std::vector<std::pair<std::size_t, std::size_t>> frozen_rows(const BasicEncoderModel<T>& model) {
  return {{model.slots.tok_emb, static_cast<std::size_t>(text::kIns)}};
}

/// Full LM objective: forward, logits, loss, backward (with the INS freeze).
/// Gradients are accumulated into `grads`.
template <class T>
LmLossResult lm_forward_backward(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                                 std::span<const TokenId> labels,
                                 std::span<const std::uint8_t> predict_mask, BasicParams<T>& grads,
                                 Rng* dropout_rng = nullptr, bool freeze_ins = true);

/// Loss and accuracy without gradients.
template <class T>
LmLossResult lm_evaluate(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                         std::span<const TokenId> labels,
                         std::span<const std::uint8_t> predict_mask);

double perplexity(double mean_nll);

}  // namespace wlm::nn
