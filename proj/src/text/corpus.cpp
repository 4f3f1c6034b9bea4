#include "wlm/text/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wlm::text {

std::size_t Corpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

Corpus encode_corpus(std::string_view text, const Vocab& vocab, std::string source) {
  Corpus corpus;
  corpus.source_path = std::move(source);
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto ids = vocab.encode(text.substr(start, end - start));
    if (!ids.empty()) corpus.sentences.push_back(std::move(ids));
    start = end + 1;
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Vocab& vocab) {
  return encode_corpus(read_text_file(path), vocab, path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace wlm::text
