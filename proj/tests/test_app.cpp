#include <cmath>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "wlm/app/experiment.hpp"
#include "wlm/app/pretrain.hpp"
#include "wlm/app/run_config.hpp"
#include "wlm/app/stats.hpp"
#include "wlm/app/synthetic.hpp"

using namespace wlm;
using namespace wlm::app;

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

}  // namespace

TEST_CASE("run config parsing, overrides and round trip") {
  const auto cfg = parse_run_config(R"(
# comment
objective = mlm
seed = 42
warp.p_select = 0.2
model.d_model = 32
model.n_heads = 2
optim.lr = 0.0005
experiment.seeds = 3, 4
noise.test.p_sub = 0.2   # trailing comment
finetune.freeze_encoder = true
)");
  CHECK(cfg.objective == Objective::Mlm);
  CHECK(cfg.seed == 42);
  CHECK(cfg.warp_config().p_select == 0.2);
  CHECK(cfg.warp_config().proportions == warp::WarpConfig::mlm().proportions);
  CHECK(cfg.model_config(100).d_model == 32);
  CHECK(cfg.model_config(100).n_layers == 2);
  CHECK(cfg.adam.lr == 0.0005);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.noise_test.p_sub == 0.2);
  CHECK(cfg.ft_freeze_encoder);
  CHECK(parse_run_config(format_run_config(cfg)) == cfg);
  CHECK(parse_run_config(format_run_config(RunConfig{})) == RunConfig{});

  CHECK_THROWS_WITH(parse_run_config("nope = 1"), "unknown config key 'nope'");
  CHECK_THROWS_WITH(parse_run_config("seed = x"), doctest::Contains("'seed'"));
  CHECK_THROWS_WITH(parse_run_config("seed"), doctest::Contains("line 1"));
  CHECK_THROWS(parse_run_config("objective = blm"));
  CHECK_THROWS(parse_run_config("model.preset = huge"));

  RunConfig bad;
  bad.set("warp.mask", "0.9");  // proportions no longer sum to 1
  CHECK_THROWS(bad.validate());
  RunConfig heads;
  heads.set("model.n_heads", "5");
  CHECK_THROWS(heads.validate());
  RunConfig setting;
  setting.set("experiment.settings", "clean-clean,dirty");
  CHECK_THROWS(setting.validate());
  RunConfig wlm;
  CHECK(wlm.warp_config().proportions == warp::WarpConfig::wlm().proportions);
  CHECK(nn::param_count(parse_run_config("model.preset = paper").model_config(30000)) > 50'000'000);
}

TEST_CASE("synthetic task") {
  const auto task = synthetic_slu_task({60, 10, 20}, 5);
  CHECK(task.train.size() == 60);
  CHECK(task.val.size() == 10);
  CHECK(task.test.size() == 20);
  CHECK(synthetic_slu_task({60, 10, 20}, 5).train == task.train);
  CHECK(synthetic_slu_task({60, 10, 20}, 6).train != task.train);
  std::set<std::string> intents;
  bool multi_token_slot = false;
  for (const auto& u : task.train) {
    CHECK(u.tokens.size() == u.tags.size());
    CHECK(slu::is_valid_iob(u.tags));
    intents.insert(u.intent);
    for (const auto& t : u.tags) multi_token_slot = multi_token_slot || t.starts_with("I-");
  }
  CHECK(intents.size() >= 3);
  CHECK(multi_token_slot);

  const auto lex = synthetic_lexicon();
  CHECK(lex.size() >= 150);
  CHECK(lex.size() <= 260);
  const auto corpus = synthetic_corpus(2000, 1);
  const auto vocab = text::Vocab::build(join(corpus), 1, 1000);
  CHECK(vocab.size() <= lex.size() + text::kNumSpecials);
  CHECK(vocab.size() > 150);
}

TEST_CASE("mean, stddev and permutation test") {
  const std::vector<double> xs{1, 2, 3, 4};
  CHECK(mean(xs) == 2.5);
  CHECK(sample_stddev(xs) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(sample_stddev(std::vector<double>{7}) == 0.0);
  CHECK_THROWS(mean(std::vector<double>{}));

  const std::vector<double> a{10, 11, 12, 13, 14}, b{1, 2, 3, 4, 5};
  const auto t = permutation_test(a, b);
  CHECK(t.exact);
  CHECK(t.permutations == 252);
  CHECK(t.p_value == doctest::Approx(2.0 / 252));  // both fully separated splits
  CHECK(t.observed == 9.0);
  CHECK(permutation_test(a, a).p_value == 1.0);
  const auto sym = permutation_test(b, a);
  CHECK(sym.p_value == t.p_value);

  // Brute force over bitmasks for an uneven split.
  const std::vector<double> c{0.3, 0.9, 0.1}, d{0.5, 0.2, 0.8, 0.4};
  std::vector<double> pool{0.3, 0.9, 0.1, 0.5, 0.2, 0.8, 0.4};
  const double obs = std::abs(mean(c) - mean(d));
  int extreme = 0, total = 0;
  for (int mask = 0; mask < 128; ++mask) {
    if (__builtin_popcount(mask) != 3) continue;
    double sa = 0, sb = 0;
    for (int i = 0; i < 7; ++i) (mask >> i & 1 ? sa : sb) += pool[i];
    extreme += std::abs(sa / 3 - sb / 4) >= obs - 1e-12;
    ++total;
  }
  CHECK(permutation_test(c, d).p_value == doctest::Approx(double(extreme) / total));

  const auto sampled = permutation_test(a, b, 10, 20000, 3);
  CHECK_FALSE(sampled.exact);
  CHECK(sampled.p_value < 0.03);
}

TEST_CASE("LM batches truncate and align labels") {
  const auto vocab = text::Vocab::from_tokens(std::vector<std::string>{"a", "b", "c", "d", "e", "f"});
  std::vector<text::TokenIds> sents{{5, 6, 7, 8, 9, 10, 5, 6, 7, 8}, {6, 7}};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto b = make_lm_batch(sents, seeds, warp::WarpConfig::wlm(), vocab, 6);
  CHECK(b.tokens.batch == 2);
  CHECK(b.tokens.len <= 6);
  CHECK(b.labels.size() == b.tokens.rows());
  for (std::size_t i = 0; i < b.tokens.rows(); ++i) {
    if (!b.tokens.valid[i]) CHECK(b.mask[i] == 0);
  }
}

TEST_CASE("pretraining reduces perplexity, freezes INS and is deterministic") {
  const auto corpus_lines = synthetic_corpus(300, 2);
  const auto vocab = text::Vocab::build(join(corpus_lines), 1, 1000);
  const auto train = text::encode_corpus(join(corpus_lines), vocab);
  const auto val = text::encode_corpus(join(synthetic_corpus(60, 3)), vocab);
  PretrainConfig cfg;
  cfg.model = {vocab.size(), 32, 1, 2, 64, 32, 0.1f};
  cfg.adam.lr = 3e-3;
  cfg.epochs = 4;
  cfg.batch_size = 16;
  std::vector<std::string> lines;
  const auto r = pretrain(train, val, vocab, cfg, [&](const PretrainEpoch& e) { lines.push_back(pretrain_epoch_json(e)); });
  REQUIRE(r.history.size() == 5);
  CHECK(std::isnan(r.history[0].train_loss));
  CHECK(r.history[0].val_perplexity == doctest::Approx(double(vocab.size())).epsilon(0.15));
  CHECK(r.history.back().val_perplexity < 0.5 * r.history[0].val_perplexity);
  const auto ins = r.model.params[r.model.slots.tok_emb].row(text::kIns);
  const auto ins0 = r.initial.params[r.initial.slots.tok_emb].row(text::kIns);
  CHECK(std::equal(ins.begin(), ins.end(), ins0.begin()));

  const auto j0 = nlohmann::json::parse(lines[0]);
  CHECK(j0["train_loss"].is_null());
  CHECK(j0.contains("val_perplexity"));
  CHECK(j0.contains("val_accuracy"));

  const auto again = pretrain(train, val, vocab, cfg);
  CHECK(again.model.params == r.model.params);

  cfg.max_steps = 7;
  CHECK(pretrain(train, val, vocab, cfg).steps == 7);
  cfg.model.vocab_size += 1;
  CHECK_THROWS(pretrain(train, val, vocab, cfg));
}

TEST_CASE("experiment matrix on a tiny task") {
  ExperimentData data;
  data.task = synthetic_slu_task({40, 10, 12}, 1);
  const auto lines = synthetic_corpus(200, 2);
  data.vocab = text::Vocab::build(join(lines), 1, 1000);
  data.corpus_train = text::encode_corpus(join(lines), data.vocab);
  data.corpus_val = text::encode_corpus(join(synthetic_corpus(30, 3)), data.vocab);
  ExperimentConfig cfg;
  cfg.seeds = {1, 2};
  cfg.pretrain.model = {data.vocab.size(), 16, 1, 2, 32, 32, 0.0f};
  cfg.pretrain.epochs = 1;
  cfg.finetune.epochs = 2;
  std::vector<std::string> out;
  const auto report = run_experiment(data, cfg, [&](const std::string& l) { out.push_back(l); });
  CHECK(report.runs.size() == 2 * 3 * 2);
  CHECK(report.rows.size() == 6);
  CHECK(report.significance.size() == 3);
  CHECK(report.noise_test_stats.wer > 0.0);
  for (const char* s : {"clean-clean", "clean-noisy", "noisy-noisy", "MLM", "WLM", "p(W-M)"}) {
    CHECK(report.table.find(s) != std::string::npos);
  }

  // Report arithmetic equals recomputation from the emitted JSON lines.
  ExperimentReport again;
  again.runs = parse_test_records(out);
  CHECK(again.runs.size() == report.runs.size());
  summarize(again, cfg.objectives, cfg.settings);
  CHECK(again.table == report.table);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    std::vector<double> joint;
    for (const auto& r : again.runs) {
      if (r.objective == report.rows[i].objective && r.setting == report.rows[i].setting) {
        joint.push_back(100 * r.test.joint_accuracy);
      }
    }
    CHECK(report.rows[i].joint.mean == doctest::Approx(mean(joint)));
    CHECK(report.rows[i].joint.stddev == doctest::Approx(sample_stddev(joint)));
  }
  for (const auto& l : out) {
    const auto j = nlohmann::json::parse(l);
    if (j.contains("split")) {
      for (const char* k : {"setting", "seed", "epoch", "intent_acc", "slot_f1", "joint_acc"}) CHECK(j.contains(k));
    }
  }

  // Determinism.
  std::vector<std::string> out2;
  run_experiment(data, cfg, [&](const std::string& l) { out2.push_back(l); });
  CHECK(out2 == out);

  cfg.settings = {"bogus"};
  CHECK_THROWS(run_experiment(data, cfg));
}
