#include "wlm/warp/warp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wlm::warp {

namespace {

constexpr std::array<std::string_view, kNumWarpOps> kOpNames = {"MASK", "KEEP", "RAND", "INSERT",
                                                                 "DROP"};

TokenId random_token(const text::Vocab& vocab, Rng& rng) {
  const auto n = vocab.size() - static_cast<std::size_t>(text::kNumSpecials);
  if (n == 0) throw std::invalid_argument("vocabulary has no non-special tokens");
  return static_cast<TokenId>(text::kNumSpecials + static_cast<TokenId>(rng.below(n)));
}

WarpOp draw_op(const WarpConfig& config, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t k = 0; k < kNumWarpOps; ++k) {
    if (config.proportions[k] <= 0.0) continue;
    last_nonzero = k;
    acc += config.proportions[k];
    if (u < acc) return static_cast<WarpOp>(k);
  }
  // Rounding in the cumulative sum can leave u just above the total.
  return static_cast<WarpOp>(last_nonzero);
}

}  // namespace

std::string_view to_string(WarpOp op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<WarpOp> parse_warp_op(std::string_view name) {
  for (std::size_t k = 0; k < kNumWarpOps; ++k) {
    if (kOpNames[k] == name) return static_cast<WarpOp>(k);
  }
  return std::nullopt;
}

WarpConfig WarpConfig::mlm() { return WarpConfig{0.15, {0.8, 0.1, 0.1, 0.0, 0.0}}; }
WarpConfig WarpConfig::wlm() { return WarpConfig{0.15, {0.6, 0.1, 0.1, 0.1, 0.1}}; }

void WarpConfig::validate() const {
  if (!(p_select >= 0.0 && p_select <= 1.0)) {
    throw std::invalid_argument("p_select must be in [0,1]");
  }
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("warp proportions must be in [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("warp proportions must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

std::size_t WarpPlan::count(WarpOp op) const {
  return static_cast<std::size_t>(std::count(ops.begin(), ops.end(), std::optional<WarpOp>(op)));
}

std::size_t WarpPlan::num_selected() const {
  return static_cast<std::size_t>(
      std::count_if(ops.begin(), ops.end(), [](const auto& o) { return o.has_value(); }));
}

std::size_t WarpedExample::num_predicted() const {
  return static_cast<std::size_t>(std::count(predict_mask.begin(), predict_mask.end(), 1));
}

bool is_legal(const WarpPlan& plan) {
  const auto n = plan.seq_len();
  for (std::size_t i = 0; i < n; ++i) {
    if (plan.ops[i] != WarpOp::Drop) continue;
    if (i + 1 == n) return false;
    if (plan.ops[i + 1].has_value()) return false;
  }
  return true;
}

WarpPlan repair_plan(WarpPlan plan) {
  const auto n = plan.seq_len();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (plan.ops[i] == WarpOp::Drop) plan.ops[i + 1].reset();
  }
  if (n > 0 && plan.ops[n - 1] == WarpOp::Drop) plan.ops[n - 1] = WarpOp::Mask;
  return plan;
}

WarpPlan sample_raw_plan(std::size_t seq_len, const WarpConfig& config, Rng& rng) {
  WarpPlan plan(seq_len, rng.seed());
  for (std::size_t i = 0; i < seq_len; ++i) {
    if (rng.bernoulli(config.p_select)) plan.ops[i] = draw_op(config, rng);
  }
  return plan;
}

WarpPlan sample_plan(std::size_t seq_len, const WarpConfig& config, Rng& rng) {
  return repair_plan(sample_raw_plan(seq_len, config, rng));
}

WarpedExample apply_plan(std::span<const TokenId> original_ids, const WarpPlan& plan,
                         const text::Vocab& vocab, Rng& rng) {
  if (plan.seq_len() != original_ids.size()) {
    throw std::invalid_argument("warp plan length " + std::to_string(plan.seq_len()) +
                                " does not match sequence length " +
                                std::to_string(original_ids.size()));
  }
  if (!is_legal(plan)) throw std::invalid_argument("illegal warp plan");
  for (TokenId id : original_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
      throw std::invalid_argument("token id out of range");
    }
    if (text::is_special(id) && id != text::kUnk) {
      throw std::invalid_argument("original sequence contains a special id");
    }
  }

  WarpedExample out;
  out.original_ids.assign(original_ids.begin(), original_ids.end());
  out.plan = plan;
  const std::size_t grown = original_ids.size() + plan.count(WarpOp::Insert);
  out.input_ids.reserve(grown);
  out.label_ids.reserve(grown);
  out.predict_mask.reserve(grown);

  auto emit = [&](TokenId input, TokenId label, bool predict) {
    out.input_ids.push_back(input);
    out.label_ids.push_back(label);
    out.predict_mask.push_back(predict ? 1 : 0);
  };

  std::optional<TokenId> pending_drop;
  for (std::size_t i = 0; i < original_ids.size(); ++i) {
    const TokenId x = original_ids[i];
    if (pending_drop) {
      // Legality guarantees no op here: the token is emitted unmodified and
      // carries the dropped token as its label.
      emit(x, *pending_drop, true);
      pending_drop.reset();
      continue;
    }
    if (!plan.ops[i]) {
      emit(x, kIgnoreLabel, false);
      continue;
    }
    switch (*plan.ops[i]) {
      case WarpOp::Mask:
        emit(text::kMask, x, true);
        break;
      case WarpOp::Keep:
        emit(x, x, true);
        break;
      case WarpOp::Rand:
        emit(random_token(vocab, rng), x, true);
        break;
      case WarpOp::Insert:
        emit(random_token(vocab, rng), text::kIns, true);
        emit(x, kIgnoreLabel, false);
        break;
      case WarpOp::Drop:
        pending_drop = x;
        break;
    }
  }
  return out;
}

WarpedExample warp(std::span<const TokenId> original_ids, const WarpConfig& config,
                   const text::Vocab& vocab, Rng& rng) {
  auto plan = sample_plan(original_ids.size(), config, rng);
  return apply_plan(original_ids, plan, vocab, rng);
}

WarpedExample warp_seeded(std::span<const TokenId> original_ids, const WarpConfig& config,
                          const text::Vocab& vocab, std::uint64_t seed) {
  Rng rng(seed);
  return warp(original_ids, config, vocab, rng);
}

}  // namespace wlm::warp
