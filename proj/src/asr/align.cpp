#include "wlm/asr/align.hpp"

#include <algorithm>
#include <stdexcept>

namespace wlm::asr {

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::Match: return "MATCH";
    case EditKind::Sub: return "SUB";
    case EditKind::Ins: return "INS";
    case EditKind::Del: return "DEL";
  }
  return "?";
}

Alignment align(std::span<const text::TokenId> ref, std::span<const text::TokenId> hyp) {
  const std::size_t n = ref.size(), m = hyp.size(), w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = i;
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i * w + j] = std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }

  Alignment ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (d[(i - 1) * w + j - 1] + (same ? 0 : 1) == here) {
        ops.push_back({same ? EditKind::Match : EditKind::Sub, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && d[(i - 1) * w + j] + 1 == here) {
      ops.push_back({EditKind::Del, i - 1, std::nullopt});
      --i;
    } else {
      ops.push_back({EditKind::Ins, std::nullopt, j - 1});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

std::size_t edit_distance(const Alignment& ops) {
  return static_cast<std::size_t>(
      std::count_if(ops.begin(), ops.end(), [](const auto& op) { return op.kind != EditKind::Match; }));
}

void check_alignment(const Alignment& ops, std::span<const text::TokenId> ref,
                     std::span<const text::TokenId> hyp) {
  std::size_t r = 0, h = 0;
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("inconsistent alignment: ") + what); };
  for (const auto& op : ops) {
    const bool wants_ref = op.kind != EditKind::Ins;
    const bool wants_hyp = op.kind != EditKind::Del;
    if (op.ref.has_value() != wants_ref || op.hyp.has_value() != wants_hyp) fail("index attachment");
    if (wants_ref && (*op.ref != r || r >= ref.size())) fail("reference order");
    if (wants_hyp && (*op.hyp != h || h >= hyp.size())) fail("hypothesis order");
    if (op.kind == EditKind::Match && ref[r] != hyp[h]) fail("match on differing tokens");
    if (op.kind == EditKind::Sub && ref[r] == hyp[h]) fail("substitution of equal tokens");
    r += wants_ref;
    h += wants_hyp;
  }
  if (r != ref.size() || h != hyp.size()) fail("sequence not covered");
}

AlignmentStats& AlignmentStats::operator+=(const AlignmentStats& o) {
  n_ref += o.n_ref;
  ins += o.ins;
  del += o.del;
  sub += o.sub;
  wer = n_ref ? static_cast<double>(ins + del + sub) / static_cast<double>(n_ref) : 0.0;
  return *this;
}

AlignmentStats wer(const Alignment& ops, std::size_t n_ref) {
  if (n_ref == 0) throw std::invalid_argument("empty reference");
  AlignmentStats s;
  s.n_ref = n_ref;
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditKind::Ins: ++s.ins; break;
      case EditKind::Del: ++s.del; break;
      case EditKind::Sub: ++s.sub; break;
      case EditKind::Match: break;
    }
  }
  s.wer = static_cast<double>(s.ins + s.del + s.sub) / static_cast<double>(n_ref);
  return s;
}

}  // namespace wlm::asr
