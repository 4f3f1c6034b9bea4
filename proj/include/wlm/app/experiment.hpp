#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wlm/app/pretrain.hpp"
#include "wlm/app/run_config.hpp"
#include "wlm/app/stats.hpp"
#include "wlm/app/synthetic.hpp"
#include "wlm/asr/transfer.hpp"
#include "wlm/slu/finetune.hpp"

namespace wlm::app {

/// "clean-clean": train and test on clean text; "clean-noisy": train clean,
/// test noisy; "noisy-noisy": train and test noisy. Validation follows the
/// training condition.
inline const std::vector<std::string> kSettings{"clean-clean", "clean-noisy", "noisy-noisy"};

struct ExperimentConfig {
  std::vector<Objective> objectives{Objective::Mlm, Objective::Wlm};
  std::vector<std::string> settings = kSettings;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  PretrainConfig pretrain;  // warp is replaced per objective
  std::optional<double> warp_p_select;
  slu::FinetuneConfig finetune;
  asr::NoiseConfig noise_train = asr::NoiseConfig::train();
  asr::NoiseConfig noise_test = asr::NoiseConfig::test();
  std::uint64_t noise_seed = 7;
  /// Pretrained encoders to reuse; objectives missing here are pretrained.
  std::map<Objective, nn::Checkpoint> pretrained;

  void validate() const;
};

struct ExperimentData {
  text::Vocab vocab;
  text::Corpus corpus_train, corpus_val;
  SluTask task;
};

struct RunRecord {
  Objective objective = Objective::Wlm;
  std::string setting;
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;
  slu::SluMetrics test;
};

struct Cell {
  double mean = 0.0, stddev = 0.0;
};

struct ReportRow {
  Objective objective;
  std::string setting;
  Cell intent, slot, joint;  // percentages
};

struct SignificanceRow {
  std::string setting;
  PermutationTest intent, slot, joint;  // WLM minus MLM
};

struct ExperimentReport {
  std::vector<RunRecord> runs;  // sorted by (objective, setting, seed)
  std::vector<ReportRow> rows;
  std::vector<SignificanceRow> significance;
  std::vector<std::vector<PretrainEpoch>> pretrain_history;  // per objective
  asr::AlignmentStats noise_train_stats, noise_test_stats;
  std::string table;
};

using LineSink = std::function<void(const std::string&)>;

/// Pretrains one encoder per objective, fine-tunes per (objective, training
/// condition, seed) and scores every requested setting. Each JSON line
/// (pretraining epochs, fine-tuning epochs, final test scores) goes to `sink`.
ExperimentReport run_experiment(const ExperimentData& data, const ExperimentConfig& cfg,
                                const LineSink& sink = {});

/// Aggregates runs into rows, significance tests and the rendered table.
void summarize(ExperimentReport& report, const std::vector<Objective>& objectives,
               const std::vector<std::string>& settings);

/// Reads back the final-test JSON lines emitted by run_experiment.
std::vector<RunRecord> parse_test_records(const std::vector<std::string>& lines);

std::string render_table(const ExperimentReport& report, const std::vector<Objective>& objectives,
                         const std::vector<std::string>& settings);

ExperimentConfig experiment_config_from(const RunConfig& run, std::size_t vocab_size);

}  // namespace wlm::app
