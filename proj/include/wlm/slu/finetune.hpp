#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wlm/nnet/adam.hpp"
#include "wlm/nnet/checkpoint.hpp"
#include "wlm/slu/metrics.hpp"
#include "wlm/slu/model.hpp"

namespace wlm::slu {

struct FinetuneConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  nn::AdamConfig adam{.lr = 1e-3};
  float dropout = 0.1f;
  std::uint64_t seed = 1;
  bool freeze_encoder = false;  // train only the heads
  std::size_t patience = 0;     // stop after this many epochs without improvement; 0 = never
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  SluMetrics val;
};

struct FinetuneResult {
  SluModel model;  // best by validation joint accuracy (earliest wins ties)
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Fine-tunes encoder and heads. Label inventories come from `train`. Throws
/// if the checkpoint's vocab hash differs from `vocab`.
FinetuneResult finetune(const nn::Checkpoint& pretrained, const text::Vocab& vocab,
                        const SluDataset& train, const SluDataset& val, const FinetuneConfig& cfg,
                        const EpochCallback& on_epoch = {});

SluMetrics evaluate_model(const SluModel& model, const text::Vocab& vocab, const SluDataset& data);

}  // namespace wlm::slu
