#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wlm::text {

using TokenId = std::int32_t;
using TokenIds = std::vector<TokenId>;

// Reserved ids. These precede every corpus-derived entry.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kIns = 4;
inline constexpr TokenId kNumSpecials = 5;

inline constexpr std::string_view kSpecialLiterals[kNumSpecials] = {
    "[PAD]", "[UNK]", "[CLS]", "[MASK]", "[INS]"};

inline constexpr bool is_special(TokenId id) noexcept { return id >= 0 && id < kNumSpecials; }

/// Splits on ASCII whitespace, optionally lowercasing each token.
std::vector<std::string> split_whitespace(std::string_view text, bool lowercase);

/// Word-level vocabulary with a fixed special-token prefix.
///
/// Ids 0..4 are PAD, UNK, CLS, MASK, INS; corpus tokens start at 5. The
/// special literals are never looked up by encode(), so a corpus containing
/// the text "[MASK]" encodes it as UNK.
class Vocab {
 public:
  Vocab();

  /// Most-frequent-first vocabulary from line-delimited text. Ties are broken
  /// lexicographically; tokens seen fewer than min_count times are dropped and
  /// the result holds at most max_size entries including the specials.
  static Vocab build(std::string_view corpus_text, std::size_t min_count, std::size_t max_size,
                     bool lowercase = true);

  /// Builds from an explicit ordered list of non-special tokens.
  static Vocab from_tokens(std::span<const std::string> tokens, bool lowercase = true);

  static Vocab parse(std::string_view file_contents, bool lowercase = true);
  static Vocab load(const std::filesystem::path& path, bool lowercase = true);

  /// One token per line; line number is the id.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return id_to_token_.size(); }
  bool lowercase() const noexcept { return lowercase_; }

  /// Id for a corpus token, or kUnk.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  TokenIds encode(std::string_view sentence) const;
  TokenIds encode(std::span<const std::string> tokens) const;
  std::string decode(std::span<const TokenId> ids) const;

  /// FNV-1a of serialize(); stored in checkpoints to pin the encoding.
  std::uint64_t hash() const;

  const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  void add(std::string token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  bool lowercase_ = true;
};

}  // namespace wlm::text
