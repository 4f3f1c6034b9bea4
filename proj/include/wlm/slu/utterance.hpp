#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wlm::slu {

/// One SLU sample: surface tokens, IOB2 slot tags aligned 1:1, intent label.
struct TaggedUtterance {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string intent;

  bool operator==(const TaggedUtterance&) const = default;
};

using SluDataset = std::vector<TaggedUtterance>;

/// Splits "B-city" into ('B', "city"); "O" into ('O', ""). Throws on anything
/// else.
std::pair<char, std::string_view> split_tag(std::string_view tag);

/// IOB2 validity: every I-X directly follows B-X or I-X.
bool is_valid_iob(std::span<const std::string> tags);

/// Rewrites each I-X that does not continue a chunk of type X as B-X.
std::vector<std::string> repair_iob(std::span<const std::string> tags);

/// Text format: one "token<TAB>tag" line per token, then "#intent<TAB>LABEL",
/// then a blank line. The parser validates IOB and reports the line number.
std::string format_slu_dataset(const SluDataset& data);
SluDataset parse_slu_dataset(std::string_view text);
SluDataset read_slu_dataset(const std::filesystem::path& path);
void write_slu_dataset(const std::filesystem::path& path, const SluDataset& data);

/// Ordered label inventory.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index(const std::string& label) const;
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::string join() const;  // tab-separated
  static LabelSet split(std::string_view joined);

  bool operator==(const LabelSet& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Sorted intents and tags seen in `data`; the tag set always contains "O".
LabelSet intent_labels(const SluDataset& data);
LabelSet tag_labels(const SluDataset& data);

}  // namespace wlm::slu
