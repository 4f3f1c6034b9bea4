#include "wlm/slu/utterance.hpp"

#include <set>
#include <stdexcept>

#include "wlm/text/corpus.hpp"
#include "wlm/text/vocab.hpp"

namespace wlm::slu {

std::pair<char, std::string_view> split_tag(std::string_view tag) {
  if (tag == "O") return {'O', {}};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return {tag[0], tag.substr(2)};
  }
  throw std::invalid_argument("malformed IOB tag '" + std::string(tag) + "'");
}

bool is_valid_iob(std::span<const std::string> tags) {
  std::string_view open;  // type of the chunk the previous tag belongs to
  for (const auto& t : tags) {
    const auto [kind, type] = split_tag(t);
    if (kind == 'I' && type != open) return false;
    open = kind == 'O' ? std::string_view{} : type;
  }
  return true;
}

std::vector<std::string> repair_iob(std::span<const std::string> tags) {
  std::vector<std::string> out(tags.begin(), tags.end());
  std::string open;
  for (auto& t : out) {
    const auto [kind, type] = split_tag(t);
    if (kind == 'I' && type != open) t = "B-" + std::string(type);
    open = kind == 'O' ? std::string{} : std::string(type);
  }
  return out;
}

std::string format_slu_dataset(const SluDataset& data) {
  std::string out;
  for (const auto& u : data) {
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      out += u.tokens[i];
      out += '\t';
      out += u.tags[i];
      out += '\n';
    }
    out += "#intent\t" + u.intent + "\n\n";
  }
  return out;
}

SluDataset parse_slu_dataset(std::string_view text) {
  SluDataset data;
  TaggedUtterance cur;
  bool open = false;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("SLU dataset line " + std::to_string(line_no) + ": " + what);
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;
    if (line.empty()) {
      if (open) fail("utterance without an #intent line");
      if (end == text.size()) break;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      fail("expected exactly one TAB");
    }
    const auto left = line.substr(0, tab), right = line.substr(tab + 1);
    if (left == "#intent") {
      if (right.empty()) fail("empty intent");
      cur.intent = std::string(right);
      if (cur.tokens.empty()) fail("utterance has no tokens");
      if (!is_valid_iob(cur.tags)) fail("tag sequence is not valid IOB2");
      data.push_back(std::move(cur));
      cur = {};
      open = false;
    } else {
      if (left.empty() || text::split_whitespace(left, false).size() != 1) fail("bad token");
      try {
        split_tag(right);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      cur.tokens.emplace_back(left);
      cur.tags.emplace_back(right);
      open = true;
    }
    if (end == text.size()) break;
  }
  if (open) fail("unterminated utterance at end of file");
  return data;
}

SluDataset read_slu_dataset(const std::filesystem::path& path) {
  try {
    return parse_slu_dataset(text::read_text_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_slu_dataset(const std::filesystem::path& path, const SluDataset& data) {
  text::write_text_file(path, format_slu_dataset(data));
}

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      throw std::invalid_argument("duplicate label " + labels_[i]);
    }
  }
}

std::optional<std::size_t> LabelSet::index(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string LabelSet::join() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += '\t';
    out += labels_[i];
  }
  return out;
}

LabelSet LabelSet::split(std::string_view joined) {
  std::vector<std::string> labels;
  if (joined.empty()) return LabelSet{};
  std::size_t start = 0;
  while (true) {
    auto end = joined.find('\t', start);
    labels.emplace_back(joined.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return LabelSet(std::move(labels));
}

LabelSet intent_labels(const SluDataset& data) {
  std::set<std::string> s;
  for (const auto& u : data) s.insert(u.intent);
  return LabelSet({s.begin(), s.end()});
}

LabelSet tag_labels(const SluDataset& data) {
  std::set<std::string> s{"O"};
  for (const auto& u : data) s.insert(u.tags.begin(), u.tags.end());
  return LabelSet({s.begin(), s.end()});
}

}  // namespace wlm::slu
