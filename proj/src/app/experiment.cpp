#include "wlm/app/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace wlm::app {

namespace {

std::string objective_label(Objective o) { return o == Objective::Mlm ? "MLM" : "WLM"; }

nlohmann::json metrics_json(const slu::SluMetrics& m) {
  return {{"intent_acc", m.intent_accuracy}, {"slot_f1", m.slot_f1}, {"joint_acc", m.joint_accuracy}};
}

std::string line(Objective o, const std::string& setting, std::uint64_t seed, std::size_t epoch,
                 const char* split, const slu::SluMetrics& m) {
  nlohmann::json j = {{"objective", std::string(to_string(o))},
                      {"setting", setting},
                      {"seed", seed},
                      {"epoch", epoch},
                      {"split", split}};
  j.update(metrics_json(m));
  return j.dump();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (objectives.empty() || settings.empty() || seeds.empty()) {
    throw std::invalid_argument("experiment matrix must have objectives, settings and seeds");
  }
  for (const auto& s : settings) {
    if (std::find(kSettings.begin(), kSettings.end(), s) == kSettings.end()) {
      throw std::invalid_argument("unknown experiment setting '" + s + "'");
    }
  }
  pretrain.model.validate();
  noise_train.validate();
  noise_test.validate();
}

ExperimentConfig experiment_config_from(const RunConfig& run, std::size_t vocab_size) {
  run.validate();
  ExperimentConfig cfg;
  cfg.settings = run.settings;
  cfg.seeds = run.seeds;
  cfg.pretrain.model = run.model_config(vocab_size);
  cfg.pretrain.adam = run.adam;
  cfg.pretrain.epochs = run.epochs;
  cfg.pretrain.batch_size = run.batch_size;
  cfg.pretrain.max_steps = run.max_steps;
  cfg.pretrain.seed = run.seed;
  cfg.warp_p_select = run.warp_p_select;
  cfg.finetune.epochs = run.ft_epochs;
  cfg.finetune.batch_size = run.ft_batch_size;
  cfg.finetune.adam.lr = run.ft_lr;
  cfg.finetune.patience = run.ft_patience;
  cfg.finetune.freeze_encoder = run.ft_freeze_encoder;
  cfg.finetune.dropout = cfg.pretrain.model.dropout;
  cfg.noise_train = run.noise_train;
  cfg.noise_test = run.noise_test;
  cfg.noise_seed = derive_seed(run.seed, 0x4e4f495345ULL);
  return cfg;
}

ExperimentReport run_experiment(const ExperimentData& data, const ExperimentConfig& cfg, const LineSink& sink) {
  cfg.validate();
  auto emit = [&](const std::string& s) {
    if (sink) sink(s);
  };
  ExperimentReport report;

  const auto noisy_train = asr::make_noisy_slu_set(data.task.train, cfg.noise_train, data.vocab,
                                                   derive_seed(cfg.noise_seed, 1));
  const auto noisy_val = asr::make_noisy_slu_set(data.task.val, cfg.noise_train, data.vocab,
                                                 derive_seed(cfg.noise_seed, 2));
  const auto noisy_test = asr::make_noisy_slu_set(data.task.test, cfg.noise_test, data.vocab,
                                                  derive_seed(cfg.noise_seed, 3));
  report.noise_train_stats = noisy_train.total;
  report.noise_test_stats = noisy_test.total;

  auto wants = [&](const char* s) {
    return std::find(cfg.settings.begin(), cfg.settings.end(), s) != cfg.settings.end();
  };
  const bool need_clean_model = wants("clean-clean") || wants("clean-noisy");
  const bool need_noisy_model = wants("noisy-noisy");

  for (const auto objective : cfg.objectives) {
    nn::Checkpoint ck;
    if (const auto given = cfg.pretrained.find(objective); given != cfg.pretrained.end()) {
      ck = given->second;
      if (ck.vocab_hash != data.vocab.hash()) {
        throw std::invalid_argument("vocab hash mismatch for the pretrained " + objective_label(objective) + " encoder");
      }
      report.pretrain_history.emplace_back();
    } else {
      auto pcfg = cfg.pretrain;
      pcfg.warp = objective == Objective::Mlm ? warp::WarpConfig::mlm() : warp::WarpConfig::wlm();
      if (cfg.warp_p_select) pcfg.warp.p_select = *cfg.warp_p_select;
      const auto pre = pretrain(data.corpus_train, data.corpus_val, data.vocab, pcfg, [&](const PretrainEpoch& e) {
        auto j = nlohmann::json::parse(pretrain_epoch_json(e));
        j["objective"] = std::string(to_string(objective));
        j["phase"] = "pretrain";
        emit(j.dump());
      });
      report.pretrain_history.push_back(pre.history);
      ck.config = pre.model.config;
      ck.vocab_hash = data.vocab.hash();
      ck.params = pre.model.params;
    }

    for (const auto seed : cfg.seeds) {
      auto fcfg = cfg.finetune;
      fcfg.seed = seed;
      auto run_condition = [&](bool noisy_training, const std::vector<std::string>& settings_here) {
        const auto& train = noisy_training ? noisy_train.data : data.task.train;
        const auto& val = noisy_training ? noisy_val.data : data.task.val;
        const auto result = slu::finetune(ck, data.vocab, train, val, fcfg, [&](const slu::EpochRecord& r) {
          for (const auto& s : settings_here) emit(line(objective, s, seed, r.epoch, "val", r.val));
        });
        for (const auto& s : settings_here) {
          const auto& test = s == "clean-clean" ? data.task.test : noisy_test.data;
          RunRecord rec{objective, s, seed, result.best_epoch,
                        slu::evaluate_model(result.model, data.vocab, test)};
          emit(line(objective, s, seed, rec.best_epoch, "test", rec.test));
          report.runs.push_back(std::move(rec));
        }
      };
      if (need_clean_model) {
        std::vector<std::string> here;
        for (const char* s : {"clean-clean", "clean-noisy"}) {
          if (wants(s)) here.emplace_back(s);
        }
        run_condition(false, here);
      }
      if (need_noisy_model) run_condition(true, {"noisy-noisy"});
    }
  }
  summarize(report, cfg.objectives, cfg.settings);
  return report;
}

void summarize(ExperimentReport& report, const std::vector<Objective>& objectives,
               const std::vector<std::string>& settings) {
  auto rank = [&](const RunRecord& r) {
    const auto o = std::find(objectives.begin(), objectives.end(), r.objective) - objectives.begin();
    const auto s = std::find(settings.begin(), settings.end(), r.setting) - settings.begin();
    return std::make_tuple(o, s, r.seed);
  };
  std::sort(report.runs.begin(), report.runs.end(),
            [&](const RunRecord& a, const RunRecord& b) { return rank(a) < rank(b); });

  using Samples = std::array<std::vector<double>, 3>;
  std::map<std::pair<Objective, std::string>, Samples> samples;
  for (const auto& r : report.runs) {
    auto& s = samples[{r.objective, r.setting}];
    s[0].push_back(100.0 * r.test.intent_accuracy);
    s[1].push_back(100.0 * r.test.slot_f1);
    s[2].push_back(100.0 * r.test.joint_accuracy);
  }
  auto cell = [](const std::vector<double>& xs) { return Cell{mean(xs), sample_stddev(xs)}; };
  report.rows.clear();
  for (const auto o : objectives) {
    for (const auto& s : settings) {
      const auto it = samples.find({o, s});
      if (it == samples.end()) continue;
      report.rows.push_back({o, s, cell(it->second[0]), cell(it->second[1]), cell(it->second[2])});
    }
  }
  report.significance.clear();
  const auto mlm = std::find(objectives.begin(), objectives.end(), Objective::Mlm);
  const auto wlm = std::find(objectives.begin(), objectives.end(), Objective::Wlm);
  if (mlm != objectives.end() && wlm != objectives.end()) {
    for (const auto& s : settings) {
      const auto a = samples.find({Objective::Wlm, s});
      const auto b = samples.find({Objective::Mlm, s});
      if (a == samples.end() || b == samples.end()) continue;
      report.significance.push_back({s, permutation_test(a->second[0], b->second[0]),
                                     permutation_test(a->second[1], b->second[1]),
                                     permutation_test(a->second[2], b->second[2])});
    }
  }
  report.table = render_table(report, objectives, settings);
}

std::vector<RunRecord> parse_test_records(const std::vector<std::string>& lines) {
  std::vector<RunRecord> out;
  for (const auto& l : lines) {
    const auto j = nlohmann::json::parse(l);
    if (!j.contains("split") || j["split"] != "test") continue;
    RunRecord r;
    r.objective = parse_objective(j["objective"].get<std::string>());
    r.setting = j["setting"].get<std::string>();
    r.seed = j["seed"].get<std::uint64_t>();
    r.best_epoch = j["epoch"].get<std::size_t>();
    r.test = {j["intent_acc"].get<double>(), j["slot_f1"].get<double>(), j["joint_acc"].get<double>()};
    out.push_back(std::move(r));
  }
  return out;
}

std::string render_table(const ExperimentReport& report, const std::vector<Objective>& objectives,
                         const std::vector<std::string>& settings) {
  char buf[64];
  auto fmt_cell = [&](const Cell& c) {
    std::snprintf(buf, sizeof buf, "%6.2f±%-5.2f", c.mean, c.stddev);
    return std::string(buf);
  };
  constexpr int kCol = 13;  // display columns per metric cell
  auto pad = [](std::string s, std::size_t width) {
    // '±' is two bytes but one column.
    const std::size_t cols = s.size() - static_cast<std::size_t>(std::count(s.begin(), s.end(), '\xb1'));
    if (cols < width) s.append(width - cols, ' ');
    return s;
  };
  std::string out = pad("", 10);
  for (const auto& s : settings) out += pad(s, 3 * (kCol + 1));
  out += "\n" + pad("objective", 10);
  for (std::size_t i = 0; i < settings.size(); ++i) {
    for (const char* m : {"intent", "slot F1", "joint"}) out += pad(m, kCol + 1);
  }
  out += "\n";
  for (const auto o : objectives) {
    out += pad(objective_label(o), 10);
    for (const auto& s : settings) {
      const auto it = std::find_if(report.rows.begin(), report.rows.end(),
                                   [&](const ReportRow& r) { return r.objective == o && r.setting == s; });
      for (int k = 0; k < 3; ++k) {
        const Cell* c = it == report.rows.end() ? nullptr : (k == 0 ? &it->intent : k == 1 ? &it->slot : &it->joint);
        out += pad(c ? fmt_cell(*c) : "-", kCol + 1);
      }
    }
    out += "\n";
  }
  if (!report.significance.empty()) {
    out += pad("p(W-M)", 10);
    for (const auto& s : settings) {
      const auto it = std::find_if(report.significance.begin(), report.significance.end(),
                                   [&](const SignificanceRow& r) { return r.setting == s; });
      for (int k = 0; k < 3; ++k) {
        if (it == report.significance.end()) {
          out += pad("-", kCol + 1);
          continue;
        }
        const auto& t = k == 0 ? it->intent : k == 1 ? it->slot : it->joint;
        std::snprintf(buf, sizeof buf, "%.3f%s%+.2f", t.p_value, t.p_value < 0.05 ? "* " : "  ", t.observed);
        out += pad(buf, kCol + 1);
      }
    }
    out += "\n";
  }
  // Strip trailing padding line by line.
  std::string trimmed;
  std::size_t start = 0;
  while (start < out.size()) {
    auto end = out.find('\n', start);
    auto row = out.substr(start, end - start);
    while (!row.empty() && row.back() == ' ') row.pop_back();
    trimmed += row + "\n";
    start = end + 1;
  }
  out = std::move(trimmed);
  out += "cells: mean±stddev over seeds (percent); p(W-M): two-sided permutation p-value and WLM-MLM "
         "difference, * marks p < 0.05\n";
  return out;
}

}  // namespace wlm::app
