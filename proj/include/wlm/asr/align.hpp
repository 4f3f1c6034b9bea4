#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wlm/text/vocab.hpp"

namespace wlm::asr {

enum class EditKind { Match, Sub, Ins, Del };

std::string_view to_string(EditKind kind);

/// One step of an alignment. Match/Sub carry both indices, Ins only the
/// hypothesis index, Del only the reference index.
struct AlignmentOp {
  EditKind kind = EditKind::Match;
  std::optional<std::size_t> ref;
  std::optional<std::size_t> hyp;

  bool operator==(const AlignmentOp&) const = default;
};

using Alignment = std::vector<AlignmentOp>;

/// Minimum edit distance alignment with unit costs. Traceback walks from the
/// end and prefers the diagonal (match/sub), then deletion, then insertion.
Alignment align(std::span<const text::TokenId> ref, std::span<const text::TokenId> hyp);

/// Number of non-match ops.
std::size_t edit_distance(const Alignment& ops);

/// Throws unless `ops` walks both sequences in order, each index exactly
/// once, with Match exactly where the tokens agree.
void check_alignment(const Alignment& ops, std::span<const text::TokenId> ref,
                     std::span<const text::TokenId> hyp);

struct AlignmentStats {
  std::size_t n_ref = 0;
  std::size_t ins = 0, del = 0, sub = 0;
  double wer = 0.0;  // (ins + del + sub) / n_ref

  AlignmentStats& operator+=(const AlignmentStats& o);
  bool operator==(const AlignmentStats&) const = default;
};

/// Throws "empty reference" when n_ref is zero.
AlignmentStats wer(const Alignment& ops, std::size_t n_ref);

}  // namespace wlm::asr
