#include "wlm/asr/noise.hpp"

#include <stdexcept>

namespace wlm::asr {

void NoiseConfig::validate() const {
  for (double p : {p_sub, p_del, p_ins}) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("noise probability outside [0, 1)");
  }
}

text::TokenIds corrupt(std::span<const text::TokenId> tokens, const NoiseConfig& cfg,
                       const text::Vocab& vocab, Rng& rng) {
  cfg.validate();
  const auto n_regular = static_cast<std::uint64_t>(vocab.size()) - text::kNumSpecials;
  auto random_token = [&] {
    return static_cast<text::TokenId>(text::kNumSpecials + rng.below(n_regular));
  };
  text::TokenIds out;
  out.reserve(tokens.size() + tokens.size() / 8 + 1);
  for (const auto tok : tokens) {
    if (text::is_special(tok) && tok != text::kUnk) throw std::invalid_argument("corrupt: special token in input");
    if (cfg.p_ins > 0.0 && n_regular > 0 && rng.bernoulli(cfg.p_ins)) out.push_back(random_token());
    const double u = rng.uniform();
    if (u < cfg.p_del) continue;
    if (u < cfg.p_del + cfg.p_sub && n_regular > 1) {
      text::TokenId sub = random_token();
      while (sub == tok) sub = random_token();
      out.push_back(sub);
      continue;
    }
    out.push_back(tok);
  }
  return out;
}

}  // namespace wlm::asr
