#include "wlm/slu/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace wlm::slu {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

double fraction(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<Chunk> extract_chunks(std::span<const std::string> tags) {
  std::vector<Chunk> out;
  std::string open_type;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto [kind, type] = split_tag(tags[i]);
    const bool continues = open && kind == 'I' && type == open_type;
    if (continues) {
      out.back().end = i;
      continue;
    }
    open = kind != 'O';
    if (open) {
      open_type = std::string(type);
      out.push_back(Chunk{open_type, i, i});
    }
  }
  return out;
}

PrfScore conll_f1(std::span<const std::vector<std::string>> gold,
                  std::span<const std::vector<std::string>> predicted) {
  require_same_size(gold.size(), predicted.size(), "conll_f1");
  PrfScore s;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    require_same_size(gold[u].size(), predicted[u].size(), "conll_f1");
    auto g = extract_chunks(gold[u]);
    auto p = extract_chunks(predicted[u]);
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    std::vector<Chunk> both;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(both));
    s.correct += both.size();
    s.gold += g.size();
    s.predicted += p.size();
  }
  if (s.gold == 0 && s.predicted == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  s.precision = fraction(s.correct, s.predicted);
  s.recall = fraction(s.correct, s.gold);
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> predicted) {
  require_same_size(gold.size(), predicted.size(), "intent_accuracy");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) ok += gold[i] == predicted[i];
  return fraction(ok, gold.size());
}

double tag_sequence_accuracy(std::span<const std::vector<std::string>> gold,
                             std::span<const std::vector<std::string>> predicted) {
  require_same_size(gold.size(), predicted.size(), "tag_sequence_accuracy");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    require_same_size(gold[i].size(), predicted[i].size(), "tag_sequence_accuracy");
    ok += gold[i] == predicted[i];
  }
  return fraction(ok, gold.size());
}

double joint_accuracy(std::span<const std::string> gold_intents,
                      std::span<const std::string> predicted_intents,
                      std::span<const std::vector<std::string>> gold_tags,
                      std::span<const std::vector<std::string>> predicted_tags) {
  require_same_size(gold_intents.size(), predicted_intents.size(), "joint_accuracy");
  require_same_size(gold_intents.size(), gold_tags.size(), "joint_accuracy");
  require_same_size(gold_tags.size(), predicted_tags.size(), "joint_accuracy");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < gold_intents.size(); ++i) {
    require_same_size(gold_tags[i].size(), predicted_tags[i].size(), "joint_accuracy");
    ok += gold_intents[i] == predicted_intents[i] && gold_tags[i] == predicted_tags[i];
  }
  return fraction(ok, gold_intents.size());
}

SluMetrics evaluate_predictions(const SluDataset& gold, const SluDataset& predicted) {
  require_same_size(gold.size(), predicted.size(), "evaluate_predictions");
  std::vector<std::string> gi, pi;
  std::vector<std::vector<std::string>> gt, pt;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gi.push_back(gold[i].intent);
    pi.push_back(predicted[i].intent);
    gt.push_back(gold[i].tags);
    pt.push_back(predicted[i].tags);
  }
  return SluMetrics{intent_accuracy(gi, pi), conll_f1(gt, pt).f1, joint_accuracy(gi, pi, gt, pt)};
}

}  // namespace wlm::slu
