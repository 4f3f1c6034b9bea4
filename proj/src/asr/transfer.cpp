#include "wlm/asr/transfer.hpp"

#include <stdexcept>

#include "json.hpp"
#include "wlm/core/rng.hpp"
#include "wlm/text/corpus.hpp"

namespace wlm::asr {

slu::TaggedUtterance transfer_labels(const slu::TaggedUtterance& ref,
                                     std::span<const std::string> hyp_tokens, const Alignment& ops) {
  if (ref.tags.size() != ref.tokens.size()) throw std::invalid_argument("reference tags misaligned");
  slu::TaggedUtterance out;
  out.intent = ref.intent;
  out.tokens.assign(hyp_tokens.begin(), hyp_tokens.end());
  std::size_t r = 0, h = 0;
  for (const auto& op : ops) {
    const bool has_ref = op.kind != EditKind::Ins;
    const bool has_hyp = op.kind != EditKind::Del;
    if (op.ref.has_value() != has_ref || op.hyp.has_value() != has_hyp ||
        (has_ref && *op.ref != r) || (has_hyp && *op.hyp != h)) {
      throw std::invalid_argument("inconsistent alignment");
    }
    if (has_hyp) out.tags.push_back(has_ref ? ref.tags.at(r) : std::string("O"));
    r += has_ref;
    h += has_hyp;
  }
  if (r != ref.tokens.size() || h != hyp_tokens.size()) throw std::invalid_argument("inconsistent alignment");
  out.tags = slu::repair_iob(out.tags);
  return out;
}

NoisySet make_noisy_slu_set(const slu::SluDataset& clean, const NoiseConfig& cfg,
                            const text::Vocab& vocab, std::uint64_t seed) {
  cfg.validate();
  NoisySet set;
  set.data.reserve(clean.size());
  for (std::size_t u = 0; u < clean.size(); ++u) {
    const auto& ref = clean[u];
    if (ref.tokens.empty()) throw std::invalid_argument("empty utterance " + std::to_string(u));
    const auto ref_ids = vocab.encode(std::span<const std::string>(ref.tokens));
    Rng rng(derive_seed(seed, u));
    const auto hyp_ids = corrupt(ref_ids, cfg, vocab, rng);

    NoisyUtterance rec;
    rec.id = u;
    rec.ops = align(ref_ids, hyp_ids);
    rec.stats = wer(rec.ops, ref_ids.size());

    std::vector<std::string> hyp_tokens(hyp_ids.size());
    for (const auto& op : rec.ops) {
      if (!op.hyp) continue;
      hyp_tokens[*op.hyp] = op.kind == EditKind::Match ? ref.tokens[*op.ref] : vocab.token(hyp_ids[*op.hyp]);
    }
    if (hyp_tokens.empty()) {
      rec.fully_deleted = true;
      ++set.fully_deleted;
      set.data.push_back({{std::string(text::kSpecialLiterals[text::kUnk])}, {"O"}, ref.intent});
    } else {
      set.data.push_back(transfer_labels(ref, hyp_tokens, rec.ops));
    }
    set.total += rec.stats;
    set.records.push_back(std::move(rec));
  }
  return set;
}

namespace {

nlohmann::json stats_json(const AlignmentStats& s) {
  return {{"n_ref", s.n_ref}, {"ins", s.ins}, {"del", s.del}, {"sub", s.sub}, {"wer", s.wer}};
}

}  // namespace

std::string noisy_sidecar_json(const NoisySet& set) {
  nlohmann::json utts = nlohmann::json::array();
  for (const auto& rec : set.records) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : rec.ops) {
      ops.push_back({{"op", std::string(to_string(op.kind))},
                     {"ref", op.ref ? nlohmann::json(*op.ref) : nlohmann::json(nullptr)},
                     {"hyp", op.hyp ? nlohmann::json(*op.hyp) : nlohmann::json(nullptr)}});
    }
    utts.push_back({{"utterance_id", rec.id},
                    {"ops", std::move(ops)},
                    {"stats", stats_json(rec.stats)},
                    {"fully_deleted", rec.fully_deleted}});
  }
  nlohmann::json doc = {{"total", stats_json(set.total)},
                        {"fully_deleted", set.fully_deleted},
                        {"utterances", std::move(utts)}};
  return doc.dump() + "\n";
}

void write_noisy_sidecar(const std::filesystem::path& path, const NoisySet& set) {
  text::write_text_file(path, noisy_sidecar_json(set));
}

}  // namespace wlm::asr
