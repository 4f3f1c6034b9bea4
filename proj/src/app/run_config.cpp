#include "wlm/app/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "wlm/text/corpus.hpp"

namespace wlm::app {

std::string_view to_string(Objective o) { return o == Objective::Mlm ? "mlm" : "wlm"; }

Objective parse_objective(std::string_view s) {
  if (s == "mlm") return Objective::Mlm;
  if (s == "wlm") return Objective::Wlm;
  throw std::invalid_argument("objective must be mlm or wlm, got '" + std::string(s) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config key '" + std::string(key) + "': bad value '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + std::string(key) + "': expected true or false");
}

std::string num(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

template <class T>
std::string opt(const std::optional<T>& x) {
  if (!x) return "";
  if constexpr (std::is_floating_point_v<T>) return num(*x);
  else return std::to_string(*x);
}

template <class T>
std::string join_list(const std::vector<T>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_same_v<T, std::string>) out += x;
    else out += std::to_string(x);
  }
  return out;
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto comma = v.find(',', start);
    if (comma == std::string_view::npos) comma = v.size();
    const auto item = trim(v.substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number_field(T RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view k, std::string_view v) { c.*m = parse_number<T>(k, v); },
          [m](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return num(c.*m);
            else return std::to_string(c.*m);
          }};
}

template <class T>
Field optional_field(std::optional<T> RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view k, std::string_view v) {
            if (v.empty()) c.*m = std::nullopt;
            else c.*m = parse_number<T>(k, v);
          },
          [m](const RunConfig& c) { return opt(c.*m); }};
}

Field string_field(std::string RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view, std::string_view v) { c.*m = std::string(v); },
          [m](const RunConfig& c) { return c.*m; }};
}

Field double_ref(std::function<double&(RunConfig&)> ref) {
  return {[ref](RunConfig& c, std::string_view k, std::string_view v) { ref(c) = parse_number<double>(k, v); },
          [ref](const RunConfig& c) { return num(ref(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const auto table = [] {
    std::map<std::string, Field, std::less<>> t;
    t["objective"] = {[](RunConfig& c, std::string_view, std::string_view v) { c.objective = parse_objective(v); },
                      [](const RunConfig& c) { return std::string(to_string(c.objective)); }};
    t["seed"] = number_field(&RunConfig::seed);
    t["warp.p_select"] = optional_field(&RunConfig::warp_p_select);
    for (std::size_t i = 0; i < warp::kNumWarpOps; ++i) {
      std::string name(warp::to_string(static_cast<warp::WarpOp>(i)));
      for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      t["warp." + name] = {[i](RunConfig& c, std::string_view k, std::string_view v) {
                             if (v.empty()) c.warp_proportions[i] = std::nullopt;
                             else c.warp_proportions[i] = parse_number<double>(k, v);
                           },
                           [i](const RunConfig& c) { return opt(c.warp_proportions[i]); }};
    }
    t["model.preset"] = {[](RunConfig& c, std::string_view, std::string_view v) {
                           if (v != "desk" && v != "paper") {
                             throw std::invalid_argument("model.preset must be desk or paper");
                           }
                           c.model_preset = std::string(v);
                         },
                         [](const RunConfig& c) { return c.model_preset; }};
    t["model.d_model"] = optional_field(&RunConfig::d_model);
    t["model.n_layers"] = optional_field(&RunConfig::n_layers);
    t["model.n_heads"] = optional_field(&RunConfig::n_heads);
    t["model.d_ff"] = optional_field(&RunConfig::d_ff);
    t["model.max_len"] = optional_field(&RunConfig::max_len);
    t["model.dropout"] = optional_field(&RunConfig::dropout);
    t["optim.lr"] = double_ref([](RunConfig& c) -> double& { return c.adam.lr; });
    t["optim.beta1"] = double_ref([](RunConfig& c) -> double& { return c.adam.beta1; });
    t["optim.beta2"] = double_ref([](RunConfig& c) -> double& { return c.adam.beta2; });
    t["optim.eps"] = double_ref([](RunConfig& c) -> double& { return c.adam.eps; });
    t["pretrain.epochs"] = number_field(&RunConfig::epochs);
    t["pretrain.batch_size"] = number_field(&RunConfig::batch_size);
    t["pretrain.max_steps"] = number_field(&RunConfig::max_steps);
    t["finetune.epochs"] = number_field(&RunConfig::ft_epochs);
    t["finetune.batch_size"] = number_field(&RunConfig::ft_batch_size);
    t["finetune.lr"] = number_field(&RunConfig::ft_lr);
    t["finetune.patience"] = number_field(&RunConfig::ft_patience);
    t["finetune.freeze_encoder"] = {
        [](RunConfig& c, std::string_view k, std::string_view v) { c.ft_freeze_encoder = parse_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.ft_freeze_encoder ? "true" : "false"); }};
    t["data.corpus"] = string_field(&RunConfig::corpus);
    t["data.val_corpus"] = string_field(&RunConfig::val_corpus);
    t["data.vocab"] = string_field(&RunConfig::vocab);
    t["data.train"] = string_field(&RunConfig::train);
    t["data.val"] = string_field(&RunConfig::val);
    t["data.test"] = string_field(&RunConfig::test);
    t["data.out_dir"] = string_field(&RunConfig::out_dir);
    t["vocab.min_count"] = number_field(&RunConfig::vocab_min_count);
    t["vocab.max_size"] = number_field(&RunConfig::vocab_max_size);
    t["noise.train.p_sub"] = double_ref([](RunConfig& c) -> double& { return c.noise_train.p_sub; });
    t["noise.train.p_del"] = double_ref([](RunConfig& c) -> double& { return c.noise_train.p_del; });
    t["noise.train.p_ins"] = double_ref([](RunConfig& c) -> double& { return c.noise_train.p_ins; });
    t["noise.test.p_sub"] = double_ref([](RunConfig& c) -> double& { return c.noise_test.p_sub; });
    t["noise.test.p_del"] = double_ref([](RunConfig& c) -> double& { return c.noise_test.p_del; });
    t["noise.test.p_ins"] = double_ref([](RunConfig& c) -> double& { return c.noise_test.p_ins; });
    t["experiment.seeds"] = {[](RunConfig& c, std::string_view k, std::string_view v) {
                               c.seeds.clear();
                               for (const auto& s : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(k, s));
                             },
                             [](const RunConfig& c) { return join_list(c.seeds); }};
    t["experiment.settings"] = {[](RunConfig& c, std::string_view, std::string_view v) { c.settings = split_list(v); },
                                [](const RunConfig& c) { return join_list(c.settings); }};
    return t;
  }();
  return table;
}

const Field& field(std::string_view key) {
  const auto& t = fields();
  const auto it = t.find(key);
  if (it == t.end()) throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  return it->second;
}

}  // namespace

warp::WarpConfig RunConfig::warp_config() const {
  auto w = objective == Objective::Mlm ? warp::WarpConfig::mlm() : warp::WarpConfig::wlm();
  if (warp_p_select) w.p_select = *warp_p_select;
  for (std::size_t i = 0; i < warp::kNumWarpOps; ++i) {
    if (warp_proportions[i]) w.proportions[i] = *warp_proportions[i];
  }
  return w;
}

nn::ModelConfig RunConfig::model_config(std::size_t vocab_size) const {
  auto m = model_preset == "paper" ? nn::ModelConfig::paper(vocab_size) : nn::ModelConfig::desk(vocab_size);
  if (d_model) m.d_model = *d_model;
  if (n_layers) m.n_layers = *n_layers;
  if (n_heads) m.n_heads = *n_heads;
  if (d_ff) m.d_ff = *d_ff;
  if (max_len) m.max_len = *max_len;
  if (dropout) m.dropout = *dropout;
  return m;
}

void RunConfig::validate() const {
  warp_config().validate();
  model_config(64).validate();
  noise_train.validate();
  noise_test.validate();
  if (batch_size == 0 || ft_batch_size == 0) throw std::invalid_argument("batch sizes must be positive");
  if (!(adam.lr > 0) || !(ft_lr > 0)) throw std::invalid_argument("learning rates must be positive");
  if (seeds.empty()) throw std::invalid_argument("experiment.seeds must not be empty");
  if (settings.empty()) throw std::invalid_argument("experiment.settings must not be empty");
  for (const auto& s : settings) {
    if (s != "clean-clean" && s != "clean-noisy" && s != "noisy-noisy") {
      throw std::invalid_argument("unknown experiment setting '" + s + "'");
    }
  }
}

void RunConfig::set(std::string_view key, std::string_view value) { field(key).set(*this, key, trim(value)); }

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const auto k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  return parse_run_config(text::read_text_file(path), std::move(base));
}

std::string format_run_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& key : RunConfig::keys()) out += key + " = " + cfg.get(key) + "\n";
  return out;
}

}  // namespace wlm::app
