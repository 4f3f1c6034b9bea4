#include "wlm/slu/finetune.hpp"

#include <numeric>
#include <stdexcept>

namespace wlm::slu {

SluMetrics evaluate_model(const SluModel& model, const text::Vocab& vocab, const SluDataset& data) {
  return evaluate_predictions(data, predict(model, vocab, data));
}

FinetuneResult finetune(const nn::Checkpoint& pretrained, const text::Vocab& vocab,
                        const SluDataset& train, const SluDataset& val, const FinetuneConfig& cfg,
                        const EpochCallback& on_epoch) {
  if (pretrained.vocab_hash != vocab.hash()) {
    throw std::invalid_argument("vocab hash mismatch between checkpoint and vocabulary");
  }
  if (train.empty()) throw std::invalid_argument("empty training set");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be positive");

  auto encoder = encoder_from_checkpoint(pretrained);
  encoder.config.dropout = cfg.dropout;
  SluModel model = attach_heads(std::move(encoder), intent_labels(train), tag_labels(train),
                                derive_seed(cfg.seed, 0x4845414473ULL));

  nn::AdamState adam(model.net.params, cfg.adam);
  auto frozen = nn::frozen_rows(model.net);
  if (cfg.freeze_encoder) {
    // Freeze every row of every encoder tensor.
    for (std::size_t i = 0; i < model.intent_w; ++i) {
      for (std::size_t r = 0; r < model.net.params[i].dim(0); ++r) frozen.emplace_back(i, r);
    }
  }

  FinetuneResult result;
  result.model = model;
  double best = -1.0;
  std::size_t since_best = 0;
  Rng dropout_rng(derive_seed(cfg.seed, 0x44524f50ULL));
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, 0x5348554cULL, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      SluDataset chunk;
      for (std::size_t j = start; j < std::min(order.size(), start + cfg.batch_size); ++j) {
        chunk.push_back(train[order[j]]);
      }
      const auto batch = encode_slu_batch(chunk, vocab, model);
      auto grads = model.net.params.zeros_like();
      loss_sum += slu_forward_backward(model, batch, grads, &dropout_rng).total;
      ++batches;
      nn::adam_step(model.net.params, grads, adam, frozen);
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(batches),
                    evaluate_model(model, vocab, val.empty() ? train : val)};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val.joint_accuracy > best) {
      best = rec.val.joint_accuracy;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  result.model.net.config.dropout = pretrained.config.dropout;
  return result;
}

}  // namespace wlm::slu
