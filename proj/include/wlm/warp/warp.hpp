#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wlm/core/rng.hpp"
#include "wlm/text/vocab.hpp"

namespace wlm::warp {

using text::TokenId;
using text::TokenIds;

enum class WarpOp : std::uint8_t { Mask = 0, Keep = 1, Rand = 2, Insert = 3, Drop = 4 };
inline constexpr std::size_t kNumWarpOps = 5;

std::string_view to_string(WarpOp op);
std::optional<WarpOp> parse_warp_op(std::string_view name);

/// Per-position selection probability and the split of selected positions
/// across the five operations.
struct WarpConfig {
  double p_select = 0.15;
  std::array<double, kNumWarpOps> proportions{0.8, 0.1, 0.1, 0.0, 0.0};

  static WarpConfig mlm();  // 80/10/10/0/0
  static WarpConfig wlm();  // 60/10/10/10/10

  double proportion(WarpOp op) const { return proportions[static_cast<std::size_t>(op)]; }
  double& proportion(WarpOp op) { return proportions[static_cast<std::size_t>(op)]; }

  /// Throws std::invalid_argument unless probabilities are in [0,1] and the
  /// proportions sum to 1 within 1e-9.
  void validate() const;
};

/// Operation assignment over the positions of the original sequence.
struct WarpPlan {
  std::vector<std::optional<WarpOp>> ops;
  std::uint64_t rng_seed = 0;

  WarpPlan() = default;
  explicit WarpPlan(std::size_t seq_len, std::uint64_t seed = 0) : ops(seq_len), rng_seed(seed) {}

  std::size_t seq_len() const noexcept { return ops.size(); }
  std::size_t count(WarpOp op) const;
  std::size_t num_selected() const;

  bool operator==(const WarpPlan&) const = default;
};

/// Warped input with labels aligned 1:1. Positions without a training signal
/// carry label kPad and predict_mask 0.
struct WarpedExample {
  TokenIds input_ids;
  TokenIds label_ids;
  std::vector<std::uint8_t> predict_mask;
  TokenIds original_ids;
  WarpPlan plan;

  std::size_t num_predicted() const;
  bool operator==(const WarpedExample&) const = default;
};

inline constexpr TokenId kIgnoreLabel = text::kPad;

/// A plan is legal iff no position directly after a DROP carries an op and the
/// last position is not a DROP.
bool is_legal(const WarpPlan& plan);

/// Single left-to-right pass: an op directly after a DROP is removed, then a
/// DROP on the final position becomes MASK. Idempotent.
WarpPlan repair_plan(WarpPlan plan);

/// Bernoulli(p_select) selection per position, op drawn from the proportions.
/// No repair; exposed so operation rates can be measured before repair.
WarpPlan sample_raw_plan(std::size_t seq_len, const WarpConfig& config, Rng& rng);

/// sample_raw_plan followed by repair_plan.
WarpPlan sample_plan(std::size_t seq_len, const WarpConfig& config, Rng& rng);

/// Emits the warped sequence. Random tokens (INSERT, RAND) are drawn
/// uniformly over the non-special ids of `vocab`.
WarpedExample apply_plan(std::span<const TokenId> original_ids, const WarpPlan& plan,
                         const text::Vocab& vocab, Rng& rng);

WarpedExample warp(std::span<const TokenId> original_ids, const WarpConfig& config,
                   const text::Vocab& vocab, Rng& rng);

/// warp() on a fresh stream seeded with `seed`; the seed is recorded in the plan.
WarpedExample warp_seeded(std::span<const TokenId> original_ids, const WarpConfig& config,
                          const text::Vocab& vocab, std::uint64_t seed);

}  // namespace wlm::warp
