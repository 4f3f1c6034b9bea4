// Acceptance suite: one PASS/FAIL line per criterion, then details. Exit code
// is nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "support/align_oracle.hpp"
#include "support/gradcheck.hpp"
#include "support/span_oracle.hpp"
#include "support/warp_checks.hpp"
#include "wlm/app/experiment.hpp"
#include "wlm/app/pretrain.hpp"
#include "wlm/asr/align.hpp"
#include "wlm/asr/noise.hpp"
#include "wlm/asr/transfer.hpp"
#include "wlm/nnet/config.hpp"
#include "wlm/slu/metrics.hpp"
#include "wlm/text/corpus.hpp"
#include "wlm/warp/warp.hpp"

using namespace wlm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const fs::path kData = fs::path(WLM_DATA_DIR) / "toy";

struct ToyData {
  text::Vocab vocab;
  text::Corpus train, val;
  app::SluTask task;
};

const ToyData& toy() {
  static const ToyData d = [] {
    ToyData t;
    t.vocab = text::Vocab::load(kData / "vocab.txt");
    t.train = text::load_corpus(kData / "corpus.train.txt", t.vocab);
    t.val = text::load_corpus(kData / "corpus.val.txt", t.vocab);
    t.task.train = slu::read_slu_dataset(kData / "train.slu");
    t.task.val = slu::read_slu_dataset(kData / "val.slu");
    t.task.test = slu::read_slu_dataset(kData / "test.slu");
    return t;
  }();
  return d;
}

text::TokenIds random_sentence(Rng& rng, std::size_t len, std::size_t vocab) {
  text::TokenIds s(len);
  for (auto& x : s) x = static_cast<text::TokenId>(text::kNumSpecials + rng.below(vocab - text::kNumSpecials));
  return s;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto vocab = toy().vocab;
  const auto cfg = warp::WarpConfig::wlm();
  Rng rng(101);
  std::size_t illegal = 0, algebra = 0, label_errors = 0;
  std::string first_label_error;
  constexpr std::size_t kPlans = 100000;
  for (std::size_t k = 0; k < kPlans; ++k) {
    const std::size_t n = 1 + rng.below(128);
    const auto ids = random_sentence(rng, n, vocab.size());
    const auto ex = warp::warp(ids, cfg, vocab, rng);
    const auto& ops = ex.plan.ops;
    for (std::size_t i = 0; i < n; ++i) {
      if (ops[i] != warp::WarpOp::Drop) continue;
      if (i + 1 == n || ops[i + 1].has_value()) {
        ++illegal;
        break;
      }
    }
    const std::size_t d = ex.plan.count(warp::WarpOp::Drop), ins = ex.plan.count(warp::WarpOp::Insert);
    algebra += ex.input_ids.size() != n - d + ins;
    if (const auto why = testing::check_warped_example(ex); !why.empty()) {
      if (label_errors++ == 0) first_label_error = why;
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = illegal == 0 && algebra == 0 && label_errors == 0 && secs < 30.0;
  o.summary = fmt("%zu plans, lengths 1-128: %zu illegal, %zu length-algebra failures, %.1fs", kPlans, illegal,
                  algebra, secs);
  o.details.push_back(fmt("label/position consistency failures: %zu %s", label_errors, first_label_error.c_str()));
  return o;
}

Outcome criterion2() {
  const auto cfg = warp::WarpConfig::wlm();
  Rng rng(202);
  std::size_t positions = 0, selected = 0, post_selected = 0;
  std::array<std::size_t, warp::kNumWarpOps> raw{}, post{};
  while (positions < 1000000) {
    const auto plan = warp::sample_raw_plan(128, cfg, rng);
    const auto fixed = warp::repair_plan(plan);
    positions += plan.seq_len();
    selected += plan.num_selected();
    post_selected += fixed.num_selected();
    for (std::size_t op = 0; op < warp::kNumWarpOps; ++op) {
      raw[op] += plan.count(static_cast<warp::WarpOp>(op));
      post[op] += fixed.count(static_cast<warp::WarpOp>(op));
    }
  }
  const double sel = double(selected) / double(positions);
  bool ok = std::abs(sel - 0.15) <= 0.01;
  std::string props, post_props;
  for (std::size_t op = 0; op < warp::kNumWarpOps; ++op) {
    const double p = double(raw[op]) / double(selected);
    ok = ok && std::abs(p - cfg.proportions[op]) <= 0.02;
    props += fmt(" %s=%.4f", std::string(warp::to_string(static_cast<warp::WarpOp>(op))).c_str(), p);
    post_props += fmt(" %s=%.4f", std::string(warp::to_string(static_cast<warp::WarpOp>(op))).c_str(),
                      double(post[op]) / double(post_selected));
  }
  Outcome o;
  o.pass = ok;
  o.summary = fmt("%zu positions, selection %.4f (0.15±0.01), proportions within ±0.02: %s", positions, sel,
                  ok ? "yes" : "no");
  o.details.push_back("pre-repair:" + props);
  o.details.push_back(fmt("post-repair (informational): selection %.4f;", double(post_selected) / positions) +
                      post_props);
  return o;
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  const nn::ModelConfig cfg{50, 16, 2, 2, 64, 16, 0.0f};
  const auto model = testing::spread_parameters(nn::init_model(cfg, 303), 304);
  Rng rng(305);
  std::vector<text::TokenIds> seqs{random_sentence(rng, 7, 50), random_sentence(rng, 4, 50)};
  const auto batch = nn::TokenBatch::pack(seqs);
  std::vector<text::TokenId> labels(batch.rows());
  std::vector<std::uint8_t> mask(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    labels[r] = static_cast<text::TokenId>(rng.below(50));
    mask[r] = batch.valid[r] && rng.bernoulli(0.7);
  }
  labels[0] = text::kIns;  // exercise the INS output row too
  mask[0] = 1;
  const auto report = testing::finite_difference_check(model, batch, labels, mask);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = report.max_rel_error < 1e-3 && secs < 300.0;
  o.summary = fmt("%zu parameters checked, max relative error %.2e (< 1e-3), %.1fs", report.checked,
                  report.max_rel_error, secs);
  std::string worst;
  double w = -1;
  for (const auto& g : report.groups) {
    if (g.max_rel_error > w) w = g.max_rel_error, worst = g.name;
  }
  o.details.push_back("worst tensor: " + worst);
  return o;
}

Outcome criterion4() {
  const auto& d = toy();
  app::PretrainConfig cfg;
  cfg.warp = warp::WarpConfig::wlm();
  cfg.model = nn::ModelConfig::desk(d.vocab.size());
  cfg.epochs = 1000;
  cfg.max_steps = 500;
  cfg.seed = 404;
  const auto r = app::pretrain(d.train, d.val, d.vocab, cfg);
  const auto now = r.model.params[r.model.slots.tok_emb].row(text::kIns);
  const auto init = r.initial.params[r.initial.slots.tok_emb].row(text::kIns);
  const bool same = std::memcmp(now.data(), init.data(), now.size_bytes()) == 0;
  // Some other row must have moved, or the check would be vacuous.
  const auto mask_now = r.model.params[r.model.slots.tok_emb].row(text::kMask);
  const auto mask_init = r.initial.params[r.initial.slots.tok_emb].row(text::kMask);
  const bool others_moved = std::memcmp(mask_now.data(), mask_init.data(), mask_now.size_bytes()) != 0;
  Outcome o;
  o.pass = same && others_moved && r.steps == 500;
  o.summary = fmt("%zu WLM steps: INS row bit-identical to init: %s (MASK row moved: %s)", r.steps,
                  same ? "yes" : "no", others_moved ? "yes" : "no");
  return o;
}

std::map<app::Objective, nn::Checkpoint> g_pretrained;  // criterion 5 output, reused by 9

Outcome criterion5() {
  const auto& d = toy();
  Outcome o;
  o.pass = true;
  for (const auto objective : {app::Objective::Mlm, app::Objective::Wlm}) {
    const auto t0 = Clock::now();
    app::PretrainConfig cfg;
    cfg.warp = objective == app::Objective::Mlm ? warp::WarpConfig::mlm() : warp::WarpConfig::wlm();
    cfg.model = nn::ModelConfig::desk(d.vocab.size());
    cfg.epochs = 20;
    cfg.seed = 505;
    const auto r = app::pretrain(d.train, d.val, d.vocab, cfg);
    double best = r.history[0].val_perplexity;
    std::size_t best_epoch = 0;
    for (const auto& e : r.history) {
      if (e.val_perplexity < best) best = e.val_perplexity, best_epoch = e.epoch;
    }
    const double V = double(d.vocab.size());
    const double untrained = r.history[0].val_perplexity;
    const bool ok = best <= 0.5 * V && best <= 0.5 * untrained;
    o.pass = o.pass && ok;
    const auto name = std::string(app::to_string(objective));
    o.details.push_back(fmt("%s: V=%.0f untrained ppl %.1f, epoch-20 ppl %.2f, best %.2f at epoch %zu, acc %.3f, %.0fs",
                            name.c_str(), V, untrained, r.history.back().val_perplexity, best, best_epoch,
                            r.history.back().val_accuracy, seconds_since(t0)));
    nn::Checkpoint ck;
    ck.config = r.model.config;
    ck.vocab_hash = d.vocab.hash();
    ck.params = r.model.params;
    g_pretrained[objective] = std::move(ck);
  }
  o.summary = "validation perplexity at most half of the untrained value V within 20 epochs, both objectives";
  return o;
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const auto seqs = testing::all_sequences(6, 3, 5);
  std::unordered_map<std::uint64_t, std::size_t> cache;
  std::size_t pairs = 0, mismatches = 0, bad_ops = 0;
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      const auto ops = asr::align(a, b);
      try {
        asr::check_alignment(ops, a, b);
      } catch (const std::exception&) {
        ++bad_ops;
      }
      const auto key = testing::canonical_pair_key(a, b);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, testing::brute_distance(a, b)).first;
      mismatches += asr::edit_distance(ops) != it->second;
      ++pairs;
    }
  }
  const double align_secs = seconds_since(t0);

  // Label transfer on randomly corrupted tagged utterances.
  const auto& d = toy();
  Rng rng(606);
  std::size_t invalid = 0, utterances = 0;
  const asr::NoiseConfig heavy{0.2, 0.1, 0.1};
  while (utterances < 10000) {
    const auto& ref = d.task.train[rng.below(d.task.train.size())];
    const auto ref_ids = d.vocab.encode(std::span<const std::string>(ref.tokens));
    const auto hyp = asr::corrupt(ref_ids, utterances % 2 ? heavy : asr::NoiseConfig::train(), d.vocab, rng);
    if (hyp.empty()) continue;
    std::vector<std::string> hyp_tokens;
    for (auto id : hyp) hyp_tokens.push_back(d.vocab.token(id));
    const auto out = asr::transfer_labels(ref, hyp_tokens, asr::align(ref_ids, hyp));
    invalid += !slu::is_valid_iob(out.tags) || out.tags.size() != hyp.size();
    ++utterances;
  }
  Outcome o;
  o.pass = mismatches == 0 && bad_ops == 0 && invalid == 0 && pairs == 1093u * 1093u;
  o.summary = fmt("%zu pairs (len<=6, 3 symbols): %zu distance mismatches; %zu transfers: %zu IOB-invalid", pairs,
                  mismatches, utterances, invalid);
  o.details.push_back(fmt("inconsistent op lists: %zu; distinct brute-force searches: %zu; %.1fs", bad_ops,
                          cache.size(), align_secs));
  return o;
}

Outcome criterion7() {
  Rng rng(707);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_sentence(rng, 1 + rng.below(30), 9);
    const auto b = random_sentence(rng, rng.below(30), 9);
    const auto ops = asr::align(a, b);
    const auto s = asr::wer(ops, a.size());
    // Independent recomputation: DP distance and op counts from scratch.
    std::size_t ins = 0, del = 0, sub = 0;
    for (const auto& op : ops) {
      ins += !op.ref.has_value();
      del += !op.hyp.has_value();
      sub += op.ref && op.hyp && a[*op.ref] != b[*op.hyp];
    }
    const std::size_t dist = testing::suffix_dp_distance(a, b);
    const double expect = double(dist) / double(a.size());
    mismatches += s.ins != ins || s.del != del || s.sub != sub || s.ins + s.del + s.sub != dist || s.wer != expect;
  }

  const auto& vocab = toy().vocab;
  asr::AlignmentStats total;
  while (total.n_ref < 100000) {
    const auto ref = random_sentence(rng, 5 + rng.below(20), vocab.size());
    const auto hyp = asr::corrupt(ref, asr::NoiseConfig::train(), vocab, rng);
    total += asr::wer(asr::align(ref, hyp), ref.size());
  }
  const double n = double(total.n_ref);
  Outcome o;
  o.pass = mismatches == 0 && std::abs(total.wer - 0.186) <= 0.015;
  o.summary = fmt("1000 random pairs: %zu mismatches; simulated WER %.4f over %zu tokens (0.186±0.015)", mismatches,
                  total.wer, total.n_ref);
  o.details.push_back(fmt("measured SUB %.4f DEL %.4f INS %.4f (configured .129/.024/.033)", total.sub / n,
                          total.del / n, total.ins / n));
  return o;
}

std::size_t g_joint_violations = 0, g_joint_evaluations = 0;

void check_joint_bound(const slu::SluDataset& gold, const slu::SluDataset& pred) {
  const auto m = slu::evaluate_predictions(gold, pred);
  std::vector<std::vector<std::string>> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) g.push_back(gold[i].tags), p.push_back(pred[i].tags);
  const double bound = std::min(m.intent_accuracy, slu::tag_sequence_accuracy(g, p));
  g_joint_violations += m.joint_accuracy > bound;
  ++g_joint_evaluations;
}

Outcome criterion8() {
  Rng rng(808);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = rng.below(16);
    std::vector<std::vector<std::string>> gold{testing::random_tags(rng, len)}, pred{testing::random_tags(rng, len)};
    if (trial % 2) gold[0] = slu::repair_iob(gold[0]), pred[0] = slu::repair_iob(pred[0]);
    const auto got = slu::conll_f1(gold, pred);
    const auto want = testing::brute_counts(gold, pred);
    mismatches += got.correct != want.correct || got.predicted != want.predicted || got.gold != want.gold ||
                  std::abs(got.f1 - testing::brute_f1(want)) > 1e-12;
  }
  const auto& test = toy().task.test;
  const auto self = slu::evaluate_predictions(test, test);
  const bool gold_ok = self.intent_accuracy == 1.0 && self.slot_f1 == 1.0 && self.joint_accuracy == 1.0;
  for (int trial = 0; trial < 200; ++trial) {
    auto pred = test;
    for (auto& u : pred) {
      if (rng.bernoulli(0.2)) u.intent = "other";
      if (rng.bernoulli(0.3)) u.tags = slu::repair_iob(testing::random_tags(rng, u.tags.size()));
    }
    check_joint_bound(test, pred);
  }
  check_joint_bound(test, test);
  Outcome o;
  o.pass = mismatches == 0 && gold_ok && g_joint_violations == 0;
  o.summary = fmt("1000 random IOB pairs: %zu conll_f1 mismatches; gold-vs-gold all 1.0: %s; joint bound violated "
                  "in %zu of %zu evaluations",
                  mismatches, gold_ok ? "yes" : "no", g_joint_violations, g_joint_evaluations);
  return o;
}

Outcome criterion9() {
  const auto t0 = Clock::now();
  const auto& d = toy();
  app::ExperimentData data{d.vocab, d.train, d.val, d.task};
  app::ExperimentConfig cfg;
  cfg.pretrain.model = nn::ModelConfig::desk(d.vocab.size());
  cfg.pretrain.epochs = 20;
  cfg.pretrain.seed = 505;
  cfg.finetune.epochs = 30;
  cfg.pretrained = g_pretrained;  // empty unless criterion 5 ran in this process
  std::size_t lines = 0;
  const auto report = app::run_experiment(data, cfg, [&](const std::string&) { ++lines; });
  const double secs = seconds_since(t0);

  auto row = [&](app::Objective o, const std::string& s) -> const app::ReportRow& {
    for (const auto& r : report.rows) {
      if (r.objective == o && r.setting == s) return r;
    }
    throw std::runtime_error("missing report row");
  };
  bool noise_hurts = true;
  Outcome o;
  for (const auto obj : cfg.objectives) {
    const auto& cc = row(obj, "clean-clean");
    const auto& cn = row(obj, "clean-noisy");
    const bool ok = cc.intent.mean >= cn.intent.mean && cc.slot.mean >= cn.slot.mean && cc.joint.mean >= cn.joint.mean;
    noise_hurts = noise_hurts && ok;
    o.details.push_back(fmt("%s clean-clean vs clean-noisy: intent %.2f/%.2f slot %.2f/%.2f joint %.2f/%.2f", 
                            obj == app::Objective::Mlm ? "MLM" : "WLM", cc.intent.mean, cn.intent.mean,
                            cc.slot.mean, cn.slot.mean, cc.joint.mean, cn.joint.mean));
  }
  for (const auto& sig : report.significance) {
    if (sig.setting == "clean-clean") continue;
    o.details.push_back(fmt("WLM-MLM joint accuracy on %s: %+.2f points, permutation p=%.3f (expected direction: "
                            "positive; reported, not gated)",
                            sig.setting.c_str(), sig.joint.observed, sig.joint.p_value));
  }
  o.details.push_back(fmt("noisy sets: train WER %.4f, test WER %.4f", report.noise_train_stats.wer,
                          report.noise_test_stats.wer));
  std::istringstream table(report.table);
  for (std::string l; std::getline(table, l);) o.details.push_back("  " + l);

  std::size_t joint_above_intent = 0;
  for (const auto& r : report.runs) joint_above_intent += r.test.joint_accuracy > r.test.intent_accuracy;
  o.details.push_back(fmt("runs with joint accuracy above intent accuracy: %zu", joint_above_intent));

  const bool shape = report.runs.size() == 2 * 3 * 5 && report.rows.size() == 6 && report.significance.size() == 3;
  o.pass = shape && noise_hurts && joint_above_intent == 0 && secs < 7200.0;
  o.summary = fmt("2 objectives x 3 settings x 5 seeds: %zu runs, %zu JSON lines, clean-clean >= clean-noisy for "
                  "both objectives: %s, %.0fs%s",
                  report.runs.size(), lines, noise_hurts ? "yes" : "no", secs,
                  cfg.pretrained.empty() ? "" : " (encoders from criterion 5)");
  return o;
}

Outcome criterion10() {
  const auto n = nn::param_count(nn::ModelConfig::paper(30000));
  Outcome o;
  o.pass = n >= 50'000'000 && n <= 62'000'000;
  o.summary = fmt("paper preset with 30k vocabulary: %zu parameters (in [50M, 62M])", static_cast<std::size_t>(n));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> all = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  std::map<int, Outcome> results;
  for (const auto& [id, fn] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = Outcome{false, std::string("exception: ") + e.what(), {}};
    }
    std::fprintf(stderr, "criterion %d done\n", id);
  }
  int failed = 0;
  for (const auto& [id, r] : results) {
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", id, r.summary.c_str());
    failed += !r.pass;
  }
  std::printf("\n");
  for (const auto& [id, r] : results) {
    for (const auto& d : r.details) std::printf("  criterion %d | %s\n", id, d.c_str());
  }
  std::printf("\n%zu criteria run, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}
