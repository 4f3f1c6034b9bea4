#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wlm/text/vocab.hpp"

namespace wlm::text {

struct Corpus {
  std::vector<TokenIds> sentences;
  std::string source_path;

  std::size_t num_tokens() const;
};

/// Encodes line-delimited text; blank lines are skipped.
Corpus encode_corpus(std::string_view text, const Vocab& vocab, std::string source = {});
Corpus load_corpus(const std::filesystem::path& path, const Vocab& vocab);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace wlm::text
