#include "wlm/app/pretrain.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace wlm::app {

namespace {

constexpr std::uint64_t kInitStream = 0x494e4954;
constexpr std::uint64_t kWarpStream = 0x57415250;
constexpr std::uint64_t kDropStream = 0x44524f50;
constexpr std::uint64_t kShuffleStream = 0x5348554c;
constexpr std::uint64_t kEvalStream = 0x4556414c;

}  // namespace

LmBatch make_lm_batch(std::span<const text::TokenIds> sentences, std::span<const std::uint64_t> seeds,
                      const warp::WarpConfig& warp, const text::Vocab& vocab, std::size_t max_len) {
  std::vector<text::TokenIds> inputs, labels;
  std::vector<std::vector<std::uint8_t>> masks;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    const auto cut = std::span<const text::TokenId>(s).first(std::min(s.size(), max_len));
    auto ex = warp::warp_seeded(cut, warp, vocab, seeds[i]);
    if (ex.input_ids.size() > max_len) {
      ex.input_ids.resize(max_len);
      ex.label_ids.resize(max_len);
      ex.predict_mask.resize(max_len);
    }
    if (ex.input_ids.empty()) continue;
    inputs.push_back(std::move(ex.input_ids));
    labels.push_back(std::move(ex.label_ids));
    masks.push_back(std::move(ex.predict_mask));
  }
  LmBatch b;
  b.tokens = nn::TokenBatch::pack(inputs);
  b.labels.assign(b.tokens.rows(), warp::kIgnoreLabel);
  b.mask.assign(b.tokens.rows(), 0);
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    for (std::size_t t = 0; t < labels[r].size(); ++t) {
      b.labels[r * b.tokens.len + t] = labels[r][t];
      b.mask[r * b.tokens.len + t] = masks[r][t];
      b.predictions += masks[r][t];
    }
  }
  return b;
}

LmEval evaluate_lm(const nn::EncoderModel& model, const text::Corpus& corpus, const warp::WarpConfig& warp,
                   const text::Vocab& vocab, std::uint64_t seed, std::size_t batch_size) {
  double nll = 0.0, correct = 0.0;
  std::size_t count = 0;
  const auto& sents = corpus.sentences;
  for (std::size_t start = 0; start < sents.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, sents.size() - start);
    std::vector<std::uint64_t> seeds(n);
    for (std::size_t i = 0; i < n; ++i) seeds[i] = derive_seed(seed, kEvalStream, start + i);
    const auto b = make_lm_batch(std::span(sents).subspan(start, n), seeds, warp, vocab, model.config.max_len);
    if (b.predictions == 0) continue;
    const auto r = nn::lm_evaluate(model, b.tokens, b.labels, b.mask);
    nll += r.loss * static_cast<double>(r.count);
    correct += r.accuracy * static_cast<double>(r.count);
    count += r.count;
  }
  if (count == 0) throw std::invalid_argument("evaluation corpus yields no predictions");
  LmEval e;
  e.count = count;
  e.nll = nll / static_cast<double>(count);
  e.perplexity = nn::perplexity(e.nll);
  e.accuracy = correct / static_cast<double>(count);
  return e;
}

PretrainResult pretrain(const text::Corpus& train, const text::Corpus& val, const text::Vocab& vocab,
                        const PretrainConfig& cfg, const PretrainCallback& on_epoch) {
  cfg.warp.validate();
  if (cfg.model.vocab_size != vocab.size()) throw std::invalid_argument("model vocab_size differs from vocabulary");
  if (train.sentences.empty()) throw std::invalid_argument("empty training corpus");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be positive");

  PretrainResult res;
  res.model = nn::init_model(cfg.model, derive_seed(cfg.seed, kInitStream));
  res.initial = res.model;
  nn::AdamState adam(res.model.params, cfg.adam);
  const auto frozen = nn::frozen_rows(res.model);
  const auto& val_set = val.sentences.empty() ? train : val;
  const std::uint64_t eval_seed = derive_seed(cfg.seed, kEvalStream);

  auto record = [&](std::size_t epoch, double train_loss) {
    const auto e = evaluate_lm(res.model, val_set, cfg.warp, vocab, eval_seed);
    res.history.push_back({epoch, train_loss, e.perplexity, e.accuracy, res.steps});
    if (on_epoch) on_epoch(res.history.back());
  };
  record(0, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> order(train.sentences.size());
  std::vector<text::TokenIds> chunk;
  std::vector<std::uint64_t> seeds;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, kShuffleStream, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    Rng dropout(derive_seed(cfg.seed, kDropStream, epoch));

    double loss_sum = 0.0;
    std::size_t batches = 0;
    bool budget_hit = false;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps && res.steps >= cfg.max_steps) {
        budget_hit = true;
        break;
      }
      chunk.clear();
      seeds.clear();
      for (std::size_t j = start; j < std::min(order.size(), start + cfg.batch_size); ++j) {
        chunk.push_back(train.sentences[order[j]]);
        seeds.push_back(derive_seed(derive_seed(cfg.seed, kWarpStream, epoch), order[j]));
      }
      const auto b = make_lm_batch(chunk, seeds, cfg.warp, vocab, cfg.model.max_len);
      if (b.predictions == 0) continue;
      auto grads = res.model.params.zeros_like();
      loss_sum += nn::lm_forward_backward(res.model, b.tokens, b.labels, b.mask, grads, &dropout).loss;
      nn::adam_step(res.model.params, grads, adam, frozen);
      ++res.steps;
      ++batches;
    }
    if (batches == 0) break;
    record(epoch, loss_sum / static_cast<double>(batches));
    if (budget_hit) break;
  }
  return res;
}

std::string pretrain_epoch_json(const PretrainEpoch& e) {
  nlohmann::json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = std::isfinite(e.train_loss) ? nlohmann::json(e.train_loss) : nlohmann::json(nullptr);
  j["val_perplexity"] = e.val_perplexity;
  j["val_accuracy"] = e.val_accuracy;
  return j.dump();
}

}  // namespace wlm::app
