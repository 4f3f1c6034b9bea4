#include "wlm/nnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "wlm/text/corpus.hpp"

namespace wlm::nn {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <class U>
  void le(U value) {
    static_assert(std::is_integral_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
  }
  void f32(float value) { le(std::bit_cast<std::uint32_t>(value)); }
  void str(const std::string& s) {
    le(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  template <class U>
  U le() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  std::string str() {
    const auto n = le<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<std::string> Checkpoint::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void Checkpoint::set_meta(const std::string& key, std::string value) {
  for (auto& [k, v] : metadata) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  metadata.emplace_back(key, std::move(value));
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes("WLM1", 4);
  w.le(kCheckpointVersion);
  const auto& c = ckpt.config;
  for (std::size_t v : {c.vocab_size, c.d_model, c.n_layers, c.n_heads, c.d_ff, c.max_len}) {
    w.le(static_cast<std::uint32_t>(v));
  }
  w.f32(c.dropout);
  w.le(ckpt.vocab_hash);
  w.le(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  w.le(static_cast<std::uint32_t>(ckpt.params.size()));
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& t = ckpt.params[i];
    w.str(ckpt.params.name(i));
    w.le(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.le(static_cast<std::uint64_t>(d));
    for (float x : t.values()) w.f32(x);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "WLM1", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  Reader r(bytes);
  (void)r.le<std::uint32_t>();  // magic
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  auto& c = ck.config;
  c.vocab_size = r.le<std::uint32_t>();
  c.d_model = r.le<std::uint32_t>();
  c.n_layers = r.le<std::uint32_t>();
  c.n_heads = r.le<std::uint32_t>();
  c.d_ff = r.le<std::uint32_t>();
  c.max_len = r.le<std::uint32_t>();
  c.dropout = r.f32();
  ck.vocab_hash = r.le<std::uint64_t>();
  const auto n_meta = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.str();
    auto v = r.str();
    ck.metadata.emplace_back(std::move(k), std::move(v));
  }
  const auto n_tensors = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto name = r.str();
    const auto rank = r.le<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.le<std::uint64_t>());
    const std::size_t idx = ck.params.add(name, shape);
    auto& t = ck.params[idx];
    r.need(t.size() * 4);
    for (auto& x : t.values()) x = r.f32();
  }
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  text::write_text_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(text::read_text_file(path));
}

}  // namespace wlm::nn
