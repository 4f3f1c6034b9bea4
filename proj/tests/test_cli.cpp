// Drives the wlm executable end to end through a shell.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "wlm/nnet/checkpoint.hpp"
#include "wlm/text/corpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int exit_code = 0;
  std::string out, err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("wlm_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args) {
  const auto err_path = work_dir() / "stderr.txt";
  const std::string cmd = std::string(WLM_CLI_PATH) + " " + args + " 2>" + err_path.string();
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = wlm::text::read_text_file(err_path);
  return r;
}

std::vector<json> json_lines(const std::string& s) {
  std::vector<json> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '{') out.push_back(json::parse(line));
  }
  return out;
}

std::string p(const fs::path& x) { return x.string(); }

/// Shared fixture: synthetic data, vocabulary and a small pretrained encoder.
const fs::path& fixture() {
  static const fs::path dir = [] {
    const auto d = work_dir() / "data";
    REQUIRE(run("generate-synthetic --out-dir " + p(d) +
                " --train 60 --val 15 --test 20 --corpus-size 300 --corpus-val-size 40 --seed 3")
                .exit_code == 0);
    REQUIRE(run("build-vocab --corpus " + p(d / "corpus.train.txt") + " --out " + p(d / "vocab.txt")).exit_code == 0);
    wlm::text::write_text_file(d / "tiny.cfg",
                               "model.d_model = 16\nmodel.n_layers = 1\nmodel.n_heads = 2\nmodel.d_ff = 32\n"
                               "pretrain.epochs = 2\nfinetune.epochs = 2\nexperiment.seeds = 1,2\n");
    return d;
  }();
  return dir;
}

std::string data_flags() {
  const auto& d = fixture();
  return " --vocab " + p(d / "vocab.txt") + " --corpus " + p(d / "corpus.train.txt") + " --val-corpus " +
         p(d / "corpus.val.txt") + " --train " + p(d / "train.slu") + " --val " + p(d / "val.slu") + " --test " +
         p(d / "test.slu") + " --config " + p(d / "tiny.cfg");
}

}  // namespace

TEST_CASE("warp-preview renders three rows and a JSON record") {
  const auto r = run("warp-preview \"show me flights from boston to denver on monday morning please\" --seed 11");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("input ") == 0);
  CHECK(r.out.find("\nlabel ") != std::string::npos);
  CHECK(r.out.find("\npredict ") != std::string::npos);
  const auto j = json_lines(r.out).at(0);
  for (const char* k : {"input_ids", "label_ids", "predict_mask", "plan"}) CHECK(j.contains(k));
  CHECK(j["input_ids"].size() == j["label_ids"].size());
}

TEST_CASE("warp-preview under MLM never changes the length") {
  for (int seed = 0; seed < 40; ++seed) {
    const auto r = run("warp-preview \"a b c d e f g h i j k l\" --json --objective mlm --set warp.p_select=0.5 --seed " +
                       std::to_string(seed));
    REQUIRE(r.exit_code == 0);
    const auto j = json_lines(r.out).at(0);
    CHECK(j["input_ids"].size() == 12);
  }
}

TEST_CASE("invalid configuration exits nonzero with one line") {
  const auto cfg = work_dir() / "bad.cfg";
  wlm::text::write_text_file(cfg, "warp.mask = 0.95\n");
  for (const auto& args : {"warp-preview x --config " + p(cfg), std::string("warp-preview x --set nope=1"),
                           std::string("warp-preview x --objective xlm"), std::string("pretrain --set seed=abc")}) {
    const auto r = run(args);
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("error:") == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
}

TEST_CASE("evaluate on gold-as-predictions gives perfect scores") {
  const auto& d = fixture();
  const auto r = run("evaluate --test " + p(d / "test.slu") + " --predictions " + p(d / "test.slu"));
  REQUIRE(r.exit_code == 0);
  const auto j = json_lines(r.out).at(0);
  CHECK(j["intent_acc"] == 1.0);
  CHECK(j["slot_f1"] == 1.0);
  CHECK(j["joint_acc"] == 1.0);
}

TEST_CASE("corrupt writes a noisy set and a consistent sidecar") {
  const auto& d = fixture();
  const auto out = work_dir() / "noisy.slu";
  const auto r = run("corrupt --input " + p(d / "train.slu") + " --out " + p(out) + " --vocab " + p(d / "vocab.txt") +
                     " --seed 5");
  REQUIRE(r.exit_code == 0);
  const auto stats = json_lines(r.out).at(0);
  const auto side = json::parse(wlm::text::read_text_file(p(out) + ".align.json"));
  CHECK(side["total"]["wer"] == stats["wer"]);
  CHECK(side["utterances"].size() == 60);
  const auto again = run("corrupt --input " + p(d / "train.slu") + " --out " + p(work_dir() / "noisy2.slu") +
                         " --vocab " + p(d / "vocab.txt") + " --seed 5");
  CHECK(wlm::text::read_text_file(out) == wlm::text::read_text_file(work_dir() / "noisy2.slu"));
}

TEST_CASE("pretrain, finetune and evaluate are reproducible") {
  const auto a = work_dir() / "pre_a", b = work_dir() / "pre_b";
  const auto ra = run("pretrain" + data_flags() + " --out-dir " + p(a) + " --objective wlm --seed 4");
  REQUIRE_MESSAGE(ra.exit_code == 0, ra.err);
  const auto lines = json_lines(ra.out);
  REQUIRE(lines.size() == 3);
  for (const char* k : {"epoch", "train_loss", "val_perplexity", "val_accuracy"}) CHECK(lines[1].contains(k));
  REQUIRE(run("pretrain" + data_flags() + " --out-dir " + p(b) + " --objective wlm --seed 4").exit_code == 0);
  CHECK(wlm::text::read_text_file(a / "encoder.wlm") == wlm::text::read_text_file(b / "encoder.wlm"));
  CHECK(wlm::text::read_text_file(a / "pretrain_metrics.jsonl") ==
        wlm::text::read_text_file(b / "pretrain_metrics.jsonl"));

  // save -> load -> save is bit-identical.
  const auto ck = wlm::nn::load_checkpoint(a / "encoder.wlm");
  CHECK(ck.meta("objective") == "wlm");
  CHECK(ck.meta("run_config").has_value());
  wlm::nn::save_checkpoint(work_dir() / "resaved.wlm", ck);
  CHECK(wlm::text::read_text_file(work_dir() / "resaved.wlm") == wlm::text::read_text_file(a / "encoder.wlm"));

  const auto ft = work_dir() / "ft";
  const auto rf = run("finetune" + data_flags() + " --checkpoint " + p(a / "encoder.wlm") + " --out-dir " + p(ft));
  REQUIRE_MESSAGE(rf.exit_code == 0, rf.err);
  const auto fl = json_lines(rf.out);
  CHECK(fl.back()["summary"] == "joint_acc");
  CHECK(fs::exists(ft / "slu_seed1.wlm"));
  CHECK(fs::exists(ft / "slu_seed2.wlm"));

  const auto re = run("evaluate" + data_flags() + " --checkpoint " + p(ft / "slu_seed1.wlm"));
  REQUIRE(re.exit_code == 0);
  const auto m = json_lines(re.out).at(0);
  CHECK(m["joint_acc"].get<double>() <= m["intent_acc"].get<double>());

  // A checkpoint paired with a different vocabulary is refused.
  const auto other = work_dir() / "other_vocab.txt";
  wlm::text::write_text_file(other, wlm::text::read_text_file(fixture() / "vocab.txt") + "zzzextra\n");
  auto flags = data_flags();
  const auto vocab_flag = " --vocab " + p(fixture() / "vocab.txt");
  flags.replace(flags.find(vocab_flag), vocab_flag.size(), " --vocab " + p(other));
  const auto rm = run("finetune" + flags + " --checkpoint " + p(a / "encoder.wlm") +
                      " --out-dir " + p(work_dir() / "ft_bad"));
  CHECK(rm.exit_code != 0);
  CHECK_MESSAGE(rm.err.find("vocab hash mismatch") != std::string::npos, rm.err);
}

TEST_CASE("experiment emits JSON lines and the report table") {
  const auto out = work_dir() / "exp";
  const auto r = run("experiment" + data_flags() + " --out-dir " + p(out));
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("clean-noisy") != std::string::npos);
  CHECK(r.out.find("p(W-M)") != std::string::npos);
  CHECK(wlm::text::read_text_file(out / "report.txt") == r.out);
  std::size_t tests = 0;
  for (const auto& j : json_lines(wlm::text::read_text_file(out / "experiment.jsonl"))) {
    tests += j.value("split", "") == "test";
  }
  CHECK(tests == 2 * 3 * 2);
}
