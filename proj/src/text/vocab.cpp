#include "wlm/text/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "wlm/core/hash.hpp"
#include "wlm/text/corpus.hpp"

namespace wlm::text {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_special_literal(std::string_view token) {
  return std::find(std::begin(kSpecialLiterals), std::end(kSpecialLiterals), token) !=
         std::end(kSpecialLiterals);
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      std::string token(text.substr(i, j - i));
      if (lowercase) {
        for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

Vocab::Vocab() {
  for (auto literal : kSpecialLiterals) id_to_token_.emplace_back(literal);
}

void Vocab::add(std::string token) {
  if (token.empty()) throw std::invalid_argument("vocab: empty token");
  if (is_special_literal(token)) throw std::invalid_argument("vocab: special literal as token: " + token);
  const auto id = static_cast<TokenId>(id_to_token_.size());
  if (!token_to_id_.emplace(token, id).second) {
    throw std::invalid_argument("vocab: duplicate token: " + token);
  }
  id_to_token_.push_back(std::move(token));
}

Vocab Vocab::build(std::string_view corpus_text, std::size_t min_count, std::size_t max_size,
                   bool lowercase) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (max_size < static_cast<std::size_t>(kNumSpecials)) {
    throw std::invalid_argument("max_size must be >= 5");
  }
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (auto& token : split_whitespace(corpus_text, lowercase)) {
    ++total;
    if (is_special_literal(token)) continue;
    ++counts[std::move(token)];
  }
  if (total == 0) throw std::invalid_argument("empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= min_count) ranked.emplace_back(token, count);
  }
  // counts is ordered, so a stable sort on frequency leaves ties lexicographic.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab vocab;
  vocab.lowercase_ = lowercase;
  const std::size_t room = max_size - kNumSpecials;
  for (std::size_t i = 0; i < ranked.size() && i < room; ++i) vocab.add(ranked[i].first);
  return vocab;
}

Vocab Vocab::from_tokens(std::span<const std::string> tokens, bool lowercase) {
  Vocab vocab;
  vocab.lowercase_ = lowercase;
  for (const auto& t : tokens) vocab.add(t);
  return vocab;
}

Vocab Vocab::parse(std::string_view contents, bool lowercase) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  if (lines.size() < static_cast<std::size_t>(kNumSpecials)) {
    throw std::runtime_error("vocab file: fewer than 5 lines");
  }
  for (TokenId i = 0; i < kNumSpecials; ++i) {
    if (lines[i] != kSpecialLiterals[i]) {
      throw std::runtime_error("vocab file: line " + std::to_string(i + 1) + " must be " +
                               std::string(kSpecialLiterals[i]));
    }
  }
  Vocab vocab;
  vocab.lowercase_ = lowercase;
  for (std::size_t i = kNumSpecials; i < lines.size(); ++i) vocab.add(lines[i]);
  return vocab;
}

Vocab Vocab::load(const std::filesystem::path& path, bool lowercase) {
  return parse(read_text_file(path), lowercase);
}

std::string Vocab::serialize() const {
  std::string out;
  for (const auto& t : id_to_token_) {
    out += t;
    out += '\n';
  }
  return out;
}

void Vocab::save(const std::filesystem::path& path) const { write_text_file(path, serialize()); }

TokenId Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw std::out_of_range("unknown id " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

TokenIds Vocab::encode(std::string_view sentence) const {
  auto tokens = split_whitespace(sentence, lowercase_);
  return encode(tokens);
}

TokenIds Vocab::encode(std::span<const std::string> tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

std::uint64_t Vocab::hash() const { return fnv1a(serialize()); }

}  // namespace wlm::text
