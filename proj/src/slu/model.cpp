#include "wlm/slu/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "wlm/nnet/kernels.hpp"

namespace wlm::slu {

namespace {

void init_head(nn::Tensor& w, Rng& rng) {
  for (auto& x : w.values()) x = static_cast<float>(rng.normal() * 0.02);
}

std::vector<std::int32_t> argmax_rows(const nn::Tensor& t, std::size_t width) {
  std::vector<std::int32_t> out(t.size() / width);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = t.data() + r * width;
    out[r] = static_cast<std::int32_t>(std::max_element(row, row + width) - row);
  }
  return out;
}

}  // namespace

SluModel attach_heads(nn::EncoderModel encoder, LabelSet intents, LabelSet tags, std::uint64_t seed) {
  if (intents.size() == 0 || tags.size() == 0) throw std::invalid_argument("empty label inventory");
  SluModel m;
  m.net = std::move(encoder);
  const std::size_t d = m.net.config.d_model;
  auto& p = m.net.params;
  m.intent_w = p.add("slu.intent.w", {d, intents.size()});
  m.intent_b = p.add("slu.intent.b", {intents.size()});
  m.slot_w = p.add("slu.slot.w", {d, tags.size()});
  m.slot_b = p.add("slu.slot.b", {tags.size()});
  Rng rng(seed);
  init_head(p[m.intent_w], rng);
  init_head(p[m.slot_w], rng);
  m.intents = std::move(intents);
  m.tags = std::move(tags);
  return m;
}

SluBatch encode_slu_batch(std::span<const TaggedUtterance> utterances, const text::Vocab& vocab,
                          const SluModel& model) {
  const std::size_t limit = model.net.config.max_len - 1;
  std::vector<text::TokenIds> seqs;
  seqs.reserve(utterances.size());
  for (const auto& u : utterances) {
    text::TokenIds ids{text::kCls};
    for (std::size_t i = 0; i < u.tokens.size() && i < limit; ++i) ids.push_back(vocab.id(u.tokens[i]));
    seqs.push_back(std::move(ids));
  }
  SluBatch b;
  b.tokens = nn::TokenBatch::pack(seqs);
  b.tag_gold.assign(b.tokens.rows(), -1);
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto& u = utterances[i];
    const auto intent = model.intents.index(u.intent);
    b.intent_gold.push_back(intent ? static_cast<std::int32_t>(*intent) : -1);
    for (std::size_t t = 0; t < u.tags.size() && t < limit; ++t) {
      const auto tag = model.tags.index(u.tags[t]);
      b.tag_gold[i * b.tokens.len + t + 1] = tag ? static_cast<std::int32_t>(*tag) : -1;
    }
  }
  return b;
}

SluLogits slu_forward(const SluModel& model, const nn::TokenBatch& tokens,
                      nn::BasicForwardCache<float>* cache, Rng* dropout_rng, nn::Tensor* hidden_out) {
  for (std::size_t b = 0; b < tokens.batch; ++b) {
    if (tokens.len == 0 || tokens.ids[b * tokens.len] != text::kCls) {
      throw std::invalid_argument("missing CLS");
    }
  }
  const auto& p = model.net.params;
  const std::size_t B = tokens.batch, L = tokens.len, D = model.net.config.d_model;
  const std::size_t NI = model.intents.size(), NT = model.tags.size();
  auto hidden = nn::encoder_forward(model.net, tokens, cache, dropout_rng);

  SluLogits out{nn::Tensor({B, NI}), nn::Tensor({B, L, NT})};
  std::vector<float> cls(B * D);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(hidden.data() + b * L * D, D, cls.data() + b * D);
  }
  nn::kernels::gemm_nn(B, D, NI, cls.data(), p[model.intent_w].data(), out.intent.data(), false);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < NI; ++j) out.intent[b * NI + j] += p[model.intent_b][j];
  }
  nn::kernels::gemm_nn(B * L, D, NT, hidden.data(), p[model.slot_w].data(), out.slot.data(), false);
  for (std::size_t r = 0; r < B * L; ++r) {
    for (std::size_t j = 0; j < NT; ++j) out.slot[r * NT + j] += p[model.slot_b][j];
  }
  if (hidden_out) *hidden_out = std::move(hidden);
  return out;
}

SluLoss slu_loss(const SluLogits& logits, std::span<const std::int32_t> intent_gold,
                 std::span<const std::int32_t> tag_gold, SluLogits* grad) {
  const std::size_t NI = logits.intent.dim(1);
  const std::size_t NT = logits.slot.dim(2);
  if (intent_gold.size() != logits.intent.dim(0) ||
      tag_gold.size() != logits.slot.dim(0) * logits.slot.dim(1)) {
    throw std::invalid_argument("slu_loss: misaligned gold labels");
  }
  auto masked = [](std::span<const std::int32_t> gold) {
    std::vector<std::uint8_t> mask(gold.size());
    std::vector<text::TokenId> labels(gold.size());
    bool any = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      mask[i] = gold[i] >= 0;
      labels[i] = std::max(gold[i], 0);
      any = any || mask[i];
    }
    return std::make_tuple(mask, labels, any);
  };
  SluLoss loss;
  if (grad) {
    grad->intent = nn::Tensor(logits.intent.shape());
    grad->slot = nn::Tensor(logits.slot.shape());
  }
  auto [imask, ilabels, iany] = masked(intent_gold);
  if (iany) {
    std::vector<float> d;
    loss.intent = nn::lm_loss<float>(logits.intent.span(), NI, ilabels, imask, grad ? &d : nullptr).loss;
    if (grad) grad->intent.values() = std::move(d);
  }
  auto [smask, slabels, sany] = masked(tag_gold);
  if (sany) {
    std::vector<float> d;
    loss.slot = nn::lm_loss<float>(logits.slot.span(), NT, slabels, smask, grad ? &d : nullptr).loss;
    if (grad) grad->slot.values() = std::move(d);
  }
  loss.total = loss.intent + loss.slot;
  return loss;
}

SluLoss slu_forward_backward(const SluModel& model, const SluBatch& batch, nn::Params& grads,
                             Rng* dropout_rng) {
  nn::BasicForwardCache<float> cache;
  nn::Tensor hidden;
  const auto logits = slu_forward(model, batch.tokens, &cache, dropout_rng, &hidden);
  SluLogits d;
  const auto loss = slu_loss(logits, batch.intent_gold, batch.tag_gold, &d);

  const auto& p = model.net.params;
  const std::size_t B = batch.tokens.batch, L = batch.tokens.len, D = model.net.config.d_model;
  const std::size_t NI = model.intents.size(), NT = model.tags.size();
  std::vector<float> d_hidden(B * L * D, 0.0f);

  // Slot head over every row.
  nn::kernels::gemm_tn(D, B * L, NT, hidden.data(), d.slot.data(), grads[model.slot_w].data(), true);
  for (std::size_t r = 0; r < B * L; ++r) {
    for (std::size_t j = 0; j < NT; ++j) grads[model.slot_b][j] += d.slot[r * NT + j];
  }
  nn::kernels::gemm_nt(B * L, NT, D, d.slot.data(), p[model.slot_w].data(), d_hidden.data(), false);

  // Intent head on the CLS rows.
  for (std::size_t b = 0; b < B; ++b) {
    const float* h = hidden.data() + b * L * D;
    const float* di = d.intent.data() + b * NI;
    float* gw = grads[model.intent_w].data();
    for (std::size_t k = 0; k < D; ++k) nn::kernels::axpy(NI, h[k], di, gw + k * NI);
    for (std::size_t j = 0; j < NI; ++j) grads[model.intent_b][j] += di[j];
    nn::kernels::gemm_nt(1, NI, D, di, p[model.intent_w].data(), d_hidden.data() + b * L * D, true);
  }

  nn::encoder_backward<float>(model.net, batch.tokens, cache, d_hidden, grads);
  nn::freeze_ins_gradient(model.net, grads);
  return loss;
}

SluDataset predict(const SluModel& model, const text::Vocab& vocab, const SluDataset& data,
                   std::size_t batch_size) {
  SluDataset out;
  out.reserve(data.size());
  const std::size_t NI = model.intents.size(), NT = model.tags.size();
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    std::span<const TaggedUtterance> chunk(data.data() + start, n);
    const auto batch = encode_slu_batch(chunk, vocab, model);
    const auto logits = slu_forward(model, batch.tokens);
    const auto intents = argmax_rows(logits.intent, NI);
    const auto tags = argmax_rows(logits.slot, NT);
    for (std::size_t i = 0; i < n; ++i) {
      TaggedUtterance u;
      u.tokens = chunk[i].tokens;
      u.intent = model.intents.label(static_cast<std::size_t>(intents[i]));
      for (std::size_t t = 0; t < u.tokens.size(); ++t) {
        const std::size_t row = i * batch.tokens.len + t + 1;
        // Tokens cut off by truncation default to "O".
        u.tags.push_back(t + 1 < batch.tokens.len ? model.tags.label(static_cast<std::size_t>(tags[row]))
                                                  : std::string("O"));
      }
      out.push_back(std::move(u));
    }
  }
  return out;
}

nn::Checkpoint to_checkpoint(const SluModel& model, std::uint64_t vocab_hash) {
  nn::Checkpoint ck;
  ck.config = model.net.config;
  ck.vocab_hash = vocab_hash;
  ck.params = model.net.params;
  ck.set_meta("kind", "slu");
  ck.set_meta("intents", model.intents.join());
  ck.set_meta("tags", model.tags.join());
  return ck;
}

nn::EncoderModel encoder_from_checkpoint(const nn::Checkpoint& ckpt) {
  nn::EncoderModel m;
  m.config = ckpt.config;
  m.slots = nn::register_encoder_params(m.params, m.config);
  nn::bind_encoder_slots(ckpt.params, ckpt.config);  // validates names and shapes
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    m.params[i] = ckpt.params[ckpt.params.index(m.params.name(i))];
  }
  return m;
}

SluModel from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.meta("kind") != "slu") throw std::runtime_error("checkpoint is not an SLU model");
  auto intents = LabelSet::split(ckpt.meta("intents").value_or(""));
  auto tags = LabelSet::split(ckpt.meta("tags").value_or(""));
  SluModel m = attach_heads(encoder_from_checkpoint(ckpt), intents, tags, 0);
  for (std::size_t idx : {m.intent_w, m.intent_b, m.slot_w, m.slot_b}) {
    const auto& name = m.net.params.name(idx);
    const auto& src = ckpt.params[ckpt.params.index(name)];
    if (src.shape() != m.net.params[idx].shape()) throw std::runtime_error("bad head shape " + name);
    m.net.params[idx] = src;
  }
  return m;
}

}  // namespace wlm::slu
