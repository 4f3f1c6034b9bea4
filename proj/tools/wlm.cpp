// Command-line driver: data generation, vocabulary, pretraining, warping
// preview, noise simulation, fine-tuning, evaluation and the experiment matrix.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wlm/app/experiment.hpp"
#include "wlm/app/pretrain.hpp"
#include "wlm/app/run_config.hpp"
#include "wlm/app/synthetic.hpp"
#include "wlm/asr/transfer.hpp"
#include "wlm/nnet/kernels.hpp"
#include "wlm/slu/finetune.hpp"
#include "wlm/text/corpus.hpp"

namespace fs = std::filesystem;
using namespace wlm;
using nlohmann::json;

namespace {

/// Options shared by every subcommand; later sources override earlier ones:
/// defaults, then --config, then --set, then dedicated flags.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> objective;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value run configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override one config entry, KEY=VALUE (repeatable)");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--objective", objective, "pretraining objective")->check(CLI::IsMember({"mlm", "wlm"}));
  }

  app::RunConfig resolve() const {
    app::RunConfig cfg;
    if (!config_path.empty()) cfg = app::load_run_config(config_path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (objective) cfg.objective = app::parse_objective(*objective);
    cfg.validate();
    return cfg;
  }
};

std::string require(const std::string& value, const char* what) {
  if (value.empty()) throw std::invalid_argument(std::string("missing ") + what);
  return value;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

text::Vocab load_vocab(const std::string& path) { return text::Vocab::load(require(path, "vocabulary path")); }

nn::Checkpoint load_checked(const std::string& path, const text::Vocab& vocab) {
  auto ck = nn::load_checkpoint(require(path, "checkpoint path"));
  if (ck.vocab_hash != vocab.hash()) {
    throw std::runtime_error("vocab hash mismatch between " + path + " and the vocabulary");
  }
  return ck;
}

std::string metrics_json(const slu::SluMetrics& m) {
  return json{{"intent_acc", m.intent_accuracy}, {"slot_f1", m.slot_f1}, {"joint_acc", m.joint_accuracy}}.dump();
}

// ---- generate-synthetic ------------------------------------------------------

struct GenerateArgs {
  std::string out_dir = "data/synthetic";
  app::SyntheticSizes sizes;
  std::size_t corpus = 20000, corpus_val = 1000;
};

void cmd_generate(const GenerateArgs& a, const app::RunConfig& cfg) {
  const auto task = app::synthetic_slu_task(a.sizes, cfg.seed);
  const fs::path dir(a.out_dir);
  slu::write_slu_dataset(dir / "train.slu", task.train);
  slu::write_slu_dataset(dir / "val.slu", task.val);
  slu::write_slu_dataset(dir / "test.slu", task.test);
  text::write_text_file(dir / "corpus.train.txt", join_lines(app::synthetic_corpus(a.corpus, derive_seed(cfg.seed, 10))));
  text::write_text_file(dir / "corpus.val.txt", join_lines(app::synthetic_corpus(a.corpus_val, derive_seed(cfg.seed, 11))));
  std::cout << json{{"out_dir", a.out_dir}, {"train", task.train.size()}, {"val", task.val.size()},
                    {"test", task.test.size()}, {"corpus", a.corpus}, {"corpus_val", a.corpus_val}}
                   .dump()
            << "\n";
}

// ---- build-vocab -------------------------------------------------------------

void cmd_build_vocab(const std::string& out, const app::RunConfig& cfg) {
  const auto text = text::read_text_file(require(cfg.corpus, "corpus path (--corpus)"));
  const auto vocab = text::Vocab::build(text, cfg.vocab_min_count, cfg.vocab_max_size);
  const auto path = require(out.empty() ? cfg.vocab : out, "output vocabulary path");
  vocab.save(path);
  std::cout << json{{"vocab", path}, {"size", vocab.size()}, {"hash", vocab.hash()}}.dump() << "\n";
}

// ---- pretrain ----------------------------------------------------------------

void cmd_pretrain(const app::RunConfig& cfg, const std::string& out_dir) {
  const auto vocab = load_vocab(cfg.vocab);
  const auto train = text::load_corpus(require(cfg.corpus, "data.corpus"), vocab);
  const auto val = cfg.val_corpus.empty() ? text::Corpus{} : text::load_corpus(cfg.val_corpus, vocab);
  app::PretrainConfig p;
  p.warp = cfg.warp_config();
  p.model = cfg.model_config(vocab.size());
  p.adam = cfg.adam;
  p.epochs = cfg.epochs;
  p.batch_size = cfg.batch_size;
  p.max_steps = cfg.max_steps;
  p.seed = cfg.seed;

  const fs::path dir(out_dir.empty() ? cfg.out_dir : out_dir);
  fs::create_directories(dir);
  std::ofstream metrics(dir / "pretrain_metrics.jsonl", std::ios::binary);
  const auto result = app::pretrain(train, val, vocab, p, [&](const app::PretrainEpoch& e) {
    const auto line = app::pretrain_epoch_json(e);
    metrics << line << "\n";
    metrics.flush();
    std::cout << line << "\n" << std::flush;
  });
  nn::Checkpoint ck;
  ck.config = result.model.config;
  ck.vocab_hash = vocab.hash();
  ck.params = result.model.params;
  ck.set_meta("kind", "encoder");
  ck.set_meta("objective", std::string(app::to_string(cfg.objective)));
  ck.set_meta("run_config", app::format_run_config(cfg));
  nn::save_checkpoint(dir / "encoder.wlm", ck);
  text::write_text_file(dir / "run_config.txt", app::format_run_config(cfg));
}

// ---- warp-preview ------------------------------------------------------------

std::string render_rows(const warp::WarpedExample& ex, const text::Vocab& vocab) {
  std::vector<std::string> in, lab, flag;
  for (std::size_t i = 0; i < ex.input_ids.size(); ++i) {
    in.push_back(vocab.token(ex.input_ids[i]));
    lab.push_back(ex.predict_mask[i] ? vocab.token(ex.label_ids[i]) : "·");
    flag.push_back(ex.predict_mask[i] ? "T" : "F");
  }
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;  // count UTF-8 code points
    return w;
  };
  std::string rows[3] = {"input   ", "label   ", "predict "};
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t w = std::max({width(in[i]), width(lab[i]), width(flag[i])}) + 1;
    for (auto* p : {&in, &lab, &flag}) {
      const auto& cell = (*p)[i];
      std::string padded = cell + std::string(w - width(cell), ' ');
      rows[p == &in ? 0 : p == &lab ? 1 : 2] += padded;
    }
  }
  std::string out;
  for (auto& r : rows) {
    while (!r.empty() && r.back() == ' ') r.pop_back();
    out += r + "\n";
  }
  return out;
}

void cmd_warp_preview(const std::string& sentence, bool json_only, const app::RunConfig& cfg) {
  // Without --vocab the sentence itself defines the vocabulary.
  const auto vocab = cfg.vocab.empty() ? text::Vocab::build(sentence, 1, 1u << 20) : text::Vocab::load(cfg.vocab);
  const auto ids = vocab.encode(std::string_view(sentence));
  if (ids.empty()) throw std::invalid_argument("empty sentence");
  const auto ex = warp::warp_seeded(ids, cfg.warp_config(), vocab, cfg.seed);
  json plan = json::array();
  for (const auto& op : ex.plan.ops) plan.push_back(op ? json(std::string(warp::to_string(*op))) : json(nullptr));
  if (!json_only) std::cout << render_rows(ex, vocab);
  std::cout << json{{"objective", std::string(app::to_string(cfg.objective))},
                    {"seed", cfg.seed},
                    {"original_ids", ex.original_ids},
                    {"input_ids", ex.input_ids},
                    {"label_ids", ex.label_ids},
                    {"predict_mask", ex.predict_mask},
                    {"plan", plan}}
                   .dump()
            << "\n";
}

// ---- corrupt -----------------------------------------------------------------

struct CorruptArgs {
  std::string input, out, sidecar, preset = "train";
  std::optional<double> p_sub, p_del, p_ins;
};

void cmd_corrupt(const CorruptArgs& a, const app::RunConfig& cfg) {
  const auto vocab = load_vocab(cfg.vocab);
  const auto clean = slu::read_slu_dataset(require(a.input, "--input"));
  auto noise = a.preset == "test" ? cfg.noise_test : cfg.noise_train;
  if (a.p_sub) noise.p_sub = *a.p_sub;
  if (a.p_del) noise.p_del = *a.p_del;
  if (a.p_ins) noise.p_ins = *a.p_ins;
  const auto noisy = asr::make_noisy_slu_set(clean, noise, vocab, cfg.seed);
  slu::write_slu_dataset(require(a.out, "--out"), noisy.data);
  asr::write_noisy_sidecar(a.sidecar.empty() ? a.out + ".align.json" : a.sidecar, noisy);
  const auto& t = noisy.total;
  std::cout << json{{"utterances", noisy.data.size()}, {"n_ref", t.n_ref}, {"wer", t.wer},
                    {"sub_rate", double(t.sub) / double(t.n_ref)}, {"del_rate", double(t.del) / double(t.n_ref)},
                    {"ins_rate", double(t.ins) / double(t.n_ref)}, {"fully_deleted", noisy.fully_deleted}}
                   .dump()
            << "\n";
}

// ---- finetune ----------------------------------------------------------------

void cmd_finetune(const std::string& ckpt_path, const std::string& out_dir, const app::RunConfig& cfg) {
  const auto vocab = load_vocab(cfg.vocab);
  const auto ck = load_checked(ckpt_path, vocab);
  const auto train = slu::read_slu_dataset(require(cfg.train, "data.train"));
  const auto val = cfg.val.empty() ? slu::SluDataset{} : slu::read_slu_dataset(cfg.val);
  const auto test = cfg.test.empty() ? slu::SluDataset{} : slu::read_slu_dataset(cfg.test);
  const fs::path dir(out_dir.empty() ? cfg.out_dir : out_dir);
  fs::create_directories(dir);
  std::ofstream metrics(dir / "finetune_metrics.jsonl", std::ios::binary);
  auto emit = [&](const std::string& line) {
    metrics << line << "\n";
    std::cout << line << "\n" << std::flush;
  };
  slu::FinetuneConfig f;
  f.epochs = cfg.ft_epochs;
  f.batch_size = cfg.ft_batch_size;
  f.adam.lr = cfg.ft_lr;
  f.patience = cfg.ft_patience;
  f.freeze_encoder = cfg.ft_freeze_encoder;
  f.dropout = ck.config.dropout;
  std::vector<double> joint;
  for (const auto seed : cfg.seeds) {
    f.seed = seed;
    auto record = [&](std::size_t epoch, const char* split, const slu::SluMetrics& m) {
      auto j = json::parse(metrics_json(m));
      j["setting"] = "finetune";
      j["seed"] = seed;
      j["epoch"] = epoch;
      j["split"] = split;
      emit(j.dump());
    };
    const auto result = slu::finetune(ck, vocab, train, val, f,
                                      [&](const slu::EpochRecord& r) { record(r.epoch, "val", r.val); });
    nn::save_checkpoint(dir / ("slu_seed" + std::to_string(seed) + ".wlm"),
                        slu::to_checkpoint(result.model, vocab.hash()));
    if (!test.empty()) {
      const auto m = slu::evaluate_model(result.model, vocab, test);
      record(result.best_epoch, "test", m);
      joint.push_back(m.joint_accuracy);
    }
  }
  if (!joint.empty()) {
    emit(json{{"summary", "joint_acc"}, {"mean", app::mean(joint)}, {"stddev", app::sample_stddev(joint)},
              {"seeds", joint.size()}}
             .dump());
  }
}

// ---- evaluate ----------------------------------------------------------------

void cmd_evaluate(const std::string& ckpt_path, const std::string& predictions, const app::RunConfig& cfg) {
  const auto gold = slu::read_slu_dataset(require(cfg.test, "data.test"));
  slu::SluMetrics m;
  if (!predictions.empty()) {
    m = slu::evaluate_predictions(gold, slu::read_slu_dataset(predictions));
  } else {
    const auto vocab = load_vocab(cfg.vocab);
    m = slu::evaluate_model(slu::from_checkpoint(load_checked(ckpt_path, vocab)), vocab, gold);
  }
  std::cout << metrics_json(m) << "\n";
}

// ---- experiment --------------------------------------------------------------

void cmd_experiment(const app::RunConfig& cfg, const std::string& out_dir, std::size_t synthetic,
                    const std::string& mlm_ckpt, const std::string& wlm_ckpt) {
  app::ExperimentData data;
  std::string corpus_text, val_text;
  if (synthetic > 0) {
    const double scale = double(synthetic) / 4478.0;
    app::SyntheticSizes sizes{synthetic, std::max<std::size_t>(20, std::size_t(500 * scale + 0.5)),
                              std::max<std::size_t>(20, std::size_t(893 * scale + 0.5))};
    data.task = app::synthetic_slu_task(sizes, cfg.seed);
    corpus_text = join_lines(app::synthetic_corpus(10 * synthetic, derive_seed(cfg.seed, 10)));
    val_text = join_lines(app::synthetic_corpus(synthetic / 4 + 50, derive_seed(cfg.seed, 11)));
  } else {
    data.task.train = slu::read_slu_dataset(require(cfg.train, "data.train"));
    data.task.val = slu::read_slu_dataset(require(cfg.val, "data.val"));
    data.task.test = slu::read_slu_dataset(require(cfg.test, "data.test"));
    corpus_text = text::read_text_file(require(cfg.corpus, "data.corpus"));
    if (!cfg.val_corpus.empty()) val_text = text::read_text_file(cfg.val_corpus);
  }
  data.vocab = cfg.vocab.empty() ? text::Vocab::build(corpus_text, cfg.vocab_min_count, cfg.vocab_max_size)
                                 : text::Vocab::load(cfg.vocab);
  data.corpus_train = text::encode_corpus(corpus_text, data.vocab);
  data.corpus_val = text::encode_corpus(val_text, data.vocab);

  const fs::path dir(out_dir.empty() ? cfg.out_dir : out_dir);
  fs::create_directories(dir);
  std::ofstream lines(dir / "experiment.jsonl", std::ios::binary);
  auto ecfg = app::experiment_config_from(cfg, data.vocab.size());
  if (!mlm_ckpt.empty()) ecfg.pretrained[app::Objective::Mlm] = load_checked(mlm_ckpt, data.vocab);
  if (!wlm_ckpt.empty()) ecfg.pretrained[app::Objective::Wlm] = load_checked(wlm_ckpt, data.vocab);
  const auto report = app::run_experiment(data, ecfg, [&](const std::string& l) {
    lines << l << "\n";
    lines.flush();
  });
  text::write_text_file(dir / "report.txt", report.table);
  text::write_text_file(dir / "run_config.txt", app::format_run_config(cfg));
  std::cout << report.table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Warped language model pretraining and SLU robustness experiments"};
  cli.require_subcommand(1);
  cli.failure_message([](const CLI::App*, const CLI::Error& e) { return std::string("error: ") + e.what() + "\n"; });
  Common common;

  auto* gen = cli.add_subcommand("generate-synthetic", "write the synthetic SLU task and pretraining corpus");
  GenerateArgs gen_args;
  gen->add_option("--out-dir", gen_args.out_dir);
  gen->add_option("--train", gen_args.sizes.train);
  gen->add_option("--val", gen_args.sizes.val);
  gen->add_option("--test", gen_args.sizes.test);
  gen->add_option("--corpus-size", gen_args.corpus, "pretraining sentences");
  gen->add_option("--corpus-val-size", gen_args.corpus_val, "validation sentences");

  auto* vocab_cmd = cli.add_subcommand("build-vocab", "build a word vocabulary from a corpus");
  std::string vocab_out;
  vocab_cmd->add_option("--out", vocab_out, "output path (default: data.vocab)");

  auto* pre = cli.add_subcommand("pretrain", "pretrain an encoder with the MLM or WLM objective");
  std::string pre_out;
  pre->add_option("--out-dir", pre_out);

  auto* preview = cli.add_subcommand("warp-preview", "show one warped sentence");
  std::string sentence;
  bool json_only = false;
  preview->add_option("sentence", sentence)->required();
  preview->add_flag("--json", json_only, "print only the JSON record");

  auto* corrupt = cli.add_subcommand("corrupt", "simulate ASR noise on an SLU dataset");
  CorruptArgs corrupt_args;
  corrupt->add_option("--input", corrupt_args.input);
  corrupt->add_option("--out", corrupt_args.out);
  corrupt->add_option("--sidecar", corrupt_args.sidecar);
  corrupt->add_option("--preset", corrupt_args.preset)->check(CLI::IsMember({"train", "test"}));
  corrupt->add_option("--p-sub", corrupt_args.p_sub);
  corrupt->add_option("--p-del", corrupt_args.p_del);
  corrupt->add_option("--p-ins", corrupt_args.p_ins);

  auto* ft = cli.add_subcommand("finetune", "fine-tune joint intent/slot models");
  std::string ft_ckpt, ft_out;
  ft->add_option("--checkpoint", ft_ckpt)->required();
  ft->add_option("--out-dir", ft_out);

  auto* ev = cli.add_subcommand("evaluate", "score a fine-tuned model or a predictions file");
  std::string ev_ckpt, ev_pred;
  ev->add_option("--checkpoint", ev_ckpt);
  ev->add_option("--predictions", ev_pred);

  auto* ex = cli.add_subcommand("experiment", "run the objective x setting x seed matrix");
  std::string ex_out;
  std::size_t ex_synthetic = 0;
  ex->add_option("--out-dir", ex_out);
  ex->add_option("--synthetic", ex_synthetic, "generate a synthetic task with this many training utterances");
  std::string ex_mlm, ex_wlm;
  ex->add_option("--mlm-checkpoint", ex_mlm, "reuse a pretrained MLM encoder");
  ex->add_option("--wlm-checkpoint", ex_wlm, "reuse a pretrained WLM encoder");

  // Data paths as flags on every subcommand, mapped onto data.* config keys.
  std::map<std::string, std::string> paths;
  for (auto* cmd : {vocab_cmd, pre, preview, corrupt, ft, ev, ex}) {
    for (const char* key : {"vocab", "corpus", "val-corpus", "train", "val", "test"}) {
      cmd->add_option(std::string("--") + key, paths[key], std::string("data.") + key);
    }
  }
  for (auto* cmd : {gen, vocab_cmd, pre, preview, corrupt, ft, ev, ex}) common.attach(cmd);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }

  try {
    auto cfg = common.resolve();
    for (const auto& [key, value] : paths) {
      if (value.empty()) continue;
      std::string k = key;
      std::replace(k.begin(), k.end(), '-', '_');
      cfg.set("data." + k, value);
    }
    if (*gen) cmd_generate(gen_args, cfg);
    else if (*vocab_cmd) cmd_build_vocab(vocab_out, cfg);
    else if (*pre) cmd_pretrain(cfg, pre_out);
    else if (*preview) cmd_warp_preview(sentence, json_only, cfg);
    else if (*corrupt) cmd_corrupt(corrupt_args, cfg);
    else if (*ft) cmd_finetune(ft_ckpt, ft_out, cfg);
    else if (*ev) cmd_evaluate(ev_ckpt, ev_pred, cfg);
    else if (*ex) cmd_experiment(cfg, ex_out, ex_synthetic, ex_mlm, ex_wlm);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
