#include "wlm/nnet/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "wlm/nnet/kernels.hpp"

namespace wlm::nn {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

template <class T>
void affine(std::size_t rows, std::size_t in, std::size_t out, const T* x, const T* w, const T* b,
            T* y) {
  kernels::gemm_nn(rows, in, out, x, w, y, false);
  for (std::size_t r = 0; r < rows; ++r) {
    T* yr = y + r * out;
    for (std::size_t j = 0; j < out; ++j) yr[j] += b[j];
  }
}

// dW += x^T dy; db += colsum(dy); dx (=/+=) dy W^T.
template <class T>
void affine_backward(std::size_t rows, std::size_t in, std::size_t out, const T* x, const T* w,
                     const T* dy, T* dw, T* db, T* dx, bool accumulate_dx) {
  kernels::gemm_tn(in, rows, out, x, dy, dw, true);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* dyr = dy + r * out;
    for (std::size_t j = 0; j < out; ++j) db[j] += dyr[j];
  }
  if (dx) kernels::gemm_nt(rows, out, in, dy, w, dx, accumulate_dx);
}

template <class T>
void layer_norm(std::size_t rows, std::size_t d, const T* x, const T* gain, const T* bias, T* y,
                T* xhat, T* rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    rstd[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const T xh = (xr[j] - mean) * rs;
      xhat[r * d + j] = xh;
      y[r * d + j] = xh * gain[j] + bias[j];
    }
  }
}

// dx += LN'(dy).
template <class T>
void layer_norm_backward(std::size_t rows, std::size_t d, const T* xhat, const T* rstd,
                         const T* gain, const T* dy, T* dgain, T* dbias, T* dx) {
  std::vector<T> dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xh = xhat + r * d;
    const T* dyr = dy + r * d;
    T mean_dxhat = 0, mean_dxhat_xhat = 0;
    for (std::size_t j = 0; j < d; ++j) {
      dgain[j] += dyr[j] * xh[j];
      dbias[j] += dyr[j];
      dxhat[j] = dyr[j] * gain[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xh[j];
    }
    mean_dxhat /= static_cast<T>(d);
    mean_dxhat_xhat /= static_cast<T>(d);
    for (std::size_t j = 0; j < d; ++j) {
      dx[r * d + j] += rstd[r] * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat);
    }
  }
}

// tanh approximation of GELU.
template <class T>
T gelu(T u) {
  const T c = static_cast<T>(0.7978845608028654);
  const T t = std::tanh(c * (u + static_cast<T>(0.044715) * u * u * u));
  return static_cast<T>(0.5) * u * (T(1) + t);
}

template <class T>
T gelu_grad(T u) {
  const T c = static_cast<T>(0.7978845608028654);
  const T a = static_cast<T>(0.044715);
  const T t = std::tanh(c * (u + a * u * u * u));
  return static_cast<T>(0.5) * (T(1) + t) +
         static_cast<T>(0.5) * u * (T(1) - t * t) * c * (T(1) + T(3) * a * u * u);
}

// Inverted dropout mask: 0 or 1/(1-p).
template <class T>
void make_dropout_mask(std::size_t n, double p, Rng& rng, std::vector<T>& mask) {
  mask.resize(n);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& m : mask) m = rng.bernoulli(p) ? T(0) : keep_scale;
}

template <class T>
void init_normal(BasicTensor<T>& t, Rng& rng) {
  for (auto& x : t.values()) x = static_cast<T>(rng.normal() * kInitStd);
}

// Copies head h of rows [b*L, b*L+L) out of a [N, D] matrix into [L, dh].
template <class T>
void gather_head(const T* src, std::size_t b, std::size_t h, std::size_t len, std::size_t d,
                 std::size_t dh, T* dst) {
  for (std::size_t t = 0; t < len; ++t) {
    const T* s = src + (b * len + t) * d + h * dh;
    std::copy(s, s + dh, dst + t * dh);
  }
}

template <class T>
void scatter_head_add(const T* src, std::size_t b, std::size_t h, std::size_t len, std::size_t d,
                      std::size_t dh, T* dst) {
  for (std::size_t t = 0; t < len; ++t) {
    T* o = dst + (b * len + t) * d + h * dh;
    for (std::size_t j = 0; j < dh; ++j) o[j] += src[t * dh + j];
  }
}

std::string layer_prefix(std::size_t l) { return "encoder.layer" + std::to_string(l) + "."; }

}  // namespace

TokenBatch TokenBatch::pack(std::span<const TokenIds> sequences) {
  TokenBatch out;
  out.batch = sequences.size();
  for (const auto& s : sequences) out.len = std::max(out.len, s.size());
  out.ids.assign(out.batch * out.len, text::kPad);
  out.valid.assign(out.batch * out.len, 0);
  for (std::size_t b = 0; b < out.batch; ++b) {
    for (std::size_t t = 0; t < sequences[b].size(); ++t) {
      out.ids[b * out.len + t] = sequences[b][t];
      out.valid[b * out.len + t] = 1;
    }
  }
  return out;
}

void ModelConfig::validate() const {
  if (vocab_size <= static_cast<std::size_t>(text::kNumSpecials)) {
    throw std::invalid_argument("vocab_size must exceed the 5 special tokens");
  }
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || max_len == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) throw std::invalid_argument("d_model must be divisible by n_heads");
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw std::invalid_argument("dropout must be in [0,1)");
}

ModelConfig ModelConfig::desk(std::size_t vocab_size) {
  return ModelConfig{vocab_size, 64, 2, 4, 256, 64, 0.1f};
}

ModelConfig ModelConfig::paper(std::size_t vocab_size) {
  return ModelConfig{vocab_size, 512, 12, 16, 2048, 512, 0.1f};
}

std::uint64_t param_count(const ModelConfig& c) {
  const std::uint64_t v = c.vocab_size, d = c.d_model, f = c.d_ff;
  const std::uint64_t attention = 4 * (d * d + d);
  const std::uint64_t feed_forward = d * f + f + f * d + d;
  const std::uint64_t norms = 2 * 2 * d;
  return v * d + c.max_len * d + c.n_layers * (attention + feed_forward + norms) + 2 * d + v;
}

template <class T>
EncoderSlots register_encoder_params(BasicParams<T>& p, const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.d_model, f = c.d_ff;
  EncoderSlots s;
  s.tok_emb = p.add("encoder.tok_emb", {c.vocab_size, d});
  s.pos_emb = p.add("encoder.pos_emb", {c.max_len, d});
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto pre = layer_prefix(l);
    LayerSlots ls{};
    ls.ln1_gain = p.add(pre + "ln1.gain", {d});
    ls.ln1_bias = p.add(pre + "ln1.bias", {d});
    ls.wq = p.add(pre + "attn.wq", {d, d});
    ls.bq = p.add(pre + "attn.bq", {d});
    ls.wk = p.add(pre + "attn.wk", {d, d});
    ls.bk = p.add(pre + "attn.bk", {d});
    ls.wv = p.add(pre + "attn.wv", {d, d});
    ls.bv = p.add(pre + "attn.bv", {d});
    ls.wo = p.add(pre + "attn.wo", {d, d});
    ls.bo = p.add(pre + "attn.bo", {d});
    ls.ln2_gain = p.add(pre + "ln2.gain", {d});
    ls.ln2_bias = p.add(pre + "ln2.bias", {d});
    ls.w1 = p.add(pre + "ff.w1", {d, f});
    ls.b1 = p.add(pre + "ff.b1", {f});
    ls.w2 = p.add(pre + "ff.w2", {f, d});
    ls.b2 = p.add(pre + "ff.b2", {d});
    s.layers.push_back(ls);
  }
  s.lnf_gain = p.add("encoder.lnf.gain", {d});
  s.lnf_bias = p.add("encoder.lnf.bias", {d});
  s.out_bias = p.add("lm.out_bias", {c.vocab_size});
  return s;
}

template <class T>
EncoderSlots bind_encoder_slots(const BasicParams<T>& p, const ModelConfig& c) {
  c.validate();
  // Register into a scratch store to get the expected names and shapes.
  BasicParams<T> expected;
  const EncoderSlots want = register_encoder_params(expected, c);
  std::vector<std::size_t> remap(expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& name = expected.name(i);
    if (!p.contains(name)) throw std::runtime_error("checkpoint is missing tensor " + name);
    remap[i] = p.index(name);
    if (p[remap[i]].shape() != expected[i].shape()) {
      throw std::runtime_error("tensor " + name + " has the wrong shape for this config");
    }
  }
  EncoderSlots s;
  s.tok_emb = remap[want.tok_emb];
  s.pos_emb = remap[want.pos_emb];
  for (const auto& wl : want.layers) {
    LayerSlots ls{remap[wl.ln1_gain], remap[wl.ln1_bias], remap[wl.wq],       remap[wl.bq],
                  remap[wl.wk],       remap[wl.bk],       remap[wl.wv],       remap[wl.bv],
                  remap[wl.wo],       remap[wl.bo],       remap[wl.ln2_gain], remap[wl.ln2_bias],
                  remap[wl.w1],       remap[wl.b1],       remap[wl.w2],       remap[wl.b2]};
    s.layers.push_back(ls);
  }
  s.lnf_gain = remap[want.lnf_gain];
  s.lnf_bias = remap[want.lnf_bias];
  s.out_bias = remap[want.out_bias];
  return s;
}

EncoderModel init_model(const ModelConfig& config, std::uint64_t seed) {
  EncoderModel m;
  m.config = config;
  m.slots = register_encoder_params(m.params, config);
  Rng rng(seed);
  auto& p = m.params;
  init_normal(p[m.slots.tok_emb], rng);
  init_normal(p[m.slots.pos_emb], rng);
  for (const auto& ls : m.slots.layers) {
    p[ls.ln1_gain].fill(1.0f);
    p[ls.ln2_gain].fill(1.0f);
    for (auto w : {ls.wq, ls.wk, ls.wv, ls.wo, ls.w1, ls.w2}) init_normal(p[w], rng);
  }
  p[m.slots.lnf_gain].fill(1.0f);
  return m;
}

template <class T>
BasicTensor<T> encoder_forward(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                               BasicForwardCache<T>* cache, Rng* dropout_rng) {
  const auto& c = model.config;
  const auto& p = model.params;
  const auto& s = model.slots;
  const std::size_t B = batch.batch, L = batch.len, N = batch.rows();
  const std::size_t D = c.d_model, F = c.d_ff, H = c.n_heads, dh = c.head_dim();
  if (L > c.max_len) {
    throw std::invalid_argument("sequence length " + std::to_string(L) + " exceeds max_len " +
                                std::to_string(c.max_len));
  }
  if (batch.ids.size() != N || batch.valid.size() != N) {
    throw std::invalid_argument("malformed token batch");
  }
  const bool dropout = dropout_rng != nullptr && c.dropout > 0.0f;

  BasicForwardCache<T> local;
  BasicForwardCache<T>& fc = cache ? *cache : local;
  fc.layers.assign(c.n_layers, {});

  // Embeddings.
  std::vector<T> x(N * D);
  const auto& tok = p[s.tok_emb];
  const auto& pos = p[s.pos_emb];
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      const TokenId id = batch.ids[b * L + t];
      if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) {
        throw std::invalid_argument("token id out of range: " + std::to_string(id));
      }
      const T* e = tok.data() + static_cast<std::size_t>(id) * D;
      const T* q = pos.data() + t * D;
      T* xr = x.data() + (b * L + t) * D;
      for (std::size_t j = 0; j < D; ++j) xr[j] = e[j] + q[j];
    }
  }
  fc.drop_embed.clear();
  if (dropout) {
    make_dropout_mask(N * D, c.dropout, *dropout_rng, fc.drop_embed);
    for (std::size_t i = 0; i < N * D; ++i) x[i] *= fc.drop_embed[i];
  }

  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const T masked = static_cast<T>(-1e30);
  std::vector<T> qh(L * dh), kh(L * dh), vh(L * dh), ch(L * dh), scores(L * L);

  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const auto& ls = s.layers[l];
    auto& lc = fc.layers[l];
    lc.x_in = x;

    lc.ln1_xhat.resize(N * D);
    lc.ln1_rstd.resize(N);
    lc.h1.resize(N * D);
    layer_norm(N, D, x.data(), p[ls.ln1_gain].data(), p[ls.ln1_bias].data(), lc.h1.data(),
               lc.ln1_xhat.data(), lc.ln1_rstd.data());

    lc.q.resize(N * D);
    lc.k.resize(N * D);
    lc.v.resize(N * D);
    affine(N, D, D, lc.h1.data(), p[ls.wq].data(), p[ls.bq].data(), lc.q.data());
    affine(N, D, D, lc.h1.data(), p[ls.wk].data(), p[ls.bk].data(), lc.k.data());
    affine(N, D, D, lc.h1.data(), p[ls.wv].data(), p[ls.bv].data(), lc.v.data());

    lc.probs.assign(B * H * L * L, T(0));
    lc.ctx.assign(N * D, T(0));
    for (std::size_t b = 0; b < B; ++b) {
      const std::uint8_t* key_valid = batch.valid.data() + b * L;
      for (std::size_t h = 0; h < H; ++h) {
        gather_head(lc.q.data(), b, h, L, D, dh, qh.data());
        gather_head(lc.k.data(), b, h, L, D, dh, kh.data());
        gather_head(lc.v.data(), b, h, L, D, dh, vh.data());
        kernels::gemm_nt(L, dh, L, qh.data(), kh.data(), scores.data(), false);
        T* P = lc.probs.data() + ((b * H + h) * L) * L;
        for (std::size_t i = 0; i < L; ++i) {
          T* row = scores.data() + i * L;
          T mx = masked;
          for (std::size_t j = 0; j < L; ++j) {
            row[j] = key_valid[j] ? row[j] * scale : masked;
            mx = std::max(mx, row[j]);
          }
          T sum = 0;
          for (std::size_t j = 0; j < L; ++j) {
            const T e = key_valid[j] ? std::exp(row[j] - mx) : T(0);
            P[i * L + j] = e;
            sum += e;
          }
          if (sum > T(0)) {
            for (std::size_t j = 0; j < L; ++j) P[i * L + j] /= sum;
          }
        }
        kernels::gemm_nn(L, L, dh, P, vh.data(), ch.data(), false);
        scatter_head_add(ch.data(), b, h, L, D, dh, lc.ctx.data());
      }
    }

    std::vector<T> attn(N * D);
    affine(N, D, D, lc.ctx.data(), p[ls.wo].data(), p[ls.bo].data(), attn.data());
    lc.drop_attn.clear();
    if (dropout) {
      make_dropout_mask(N * D, c.dropout, *dropout_rng, lc.drop_attn);
      for (std::size_t i = 0; i < N * D; ++i) attn[i] *= lc.drop_attn[i];
    }
    for (std::size_t i = 0; i < N * D; ++i) x[i] += attn[i];
    lc.x_mid = x;

    lc.ln2_xhat.resize(N * D);
    lc.ln2_rstd.resize(N);
    lc.h2.resize(N * D);
    layer_norm(N, D, x.data(), p[ls.ln2_gain].data(), p[ls.ln2_bias].data(), lc.h2.data(),
               lc.ln2_xhat.data(), lc.ln2_rstd.data());
    lc.ff_pre.resize(N * F);
    lc.ff_act.resize(N * F);
    affine(N, D, F, lc.h2.data(), p[ls.w1].data(), p[ls.b1].data(), lc.ff_pre.data());
    for (std::size_t i = 0; i < N * F; ++i) lc.ff_act[i] = gelu(lc.ff_pre[i]);
    std::vector<T> ff(N * D);
    affine(N, F, D, lc.ff_act.data(), p[ls.w2].data(), p[ls.b2].data(), ff.data());
    lc.drop_ff.clear();
    if (dropout) {
      make_dropout_mask(N * D, c.dropout, *dropout_rng, lc.drop_ff);
      for (std::size_t i = 0; i < N * D; ++i) ff[i] *= lc.drop_ff[i];
    }
    for (std::size_t i = 0; i < N * D; ++i) x[i] += ff[i];
  }

  fc.x_final = x;
  fc.lnf_xhat.resize(N * D);
  fc.lnf_rstd.resize(N);
  BasicTensor<T> hidden({B, L, D});
  layer_norm(N, D, x.data(), p[s.lnf_gain].data(), p[s.lnf_bias].data(), hidden.data(),
             fc.lnf_xhat.data(), fc.lnf_rstd.data());
  return hidden;
}

template <class T>
void encoder_backward(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                      const BasicForwardCache<T>& fc, std::span<const T> d_hidden,
                      BasicParams<T>& g) {
  const auto& c = model.config;
  const auto& p = model.params;
  const auto& s = model.slots;
  const std::size_t B = batch.batch, L = batch.len, N = batch.rows();
  const std::size_t D = c.d_model, F = c.d_ff, H = c.n_heads, dh = c.head_dim();
  if (d_hidden.size() != N * D) throw std::invalid_argument("d_hidden has the wrong size");

  std::vector<T> dx(N * D, T(0));
  layer_norm_backward(N, D, fc.lnf_xhat.data(), fc.lnf_rstd.data(), p[s.lnf_gain].data(),
                      d_hidden.data(), g[s.lnf_gain].data(), g[s.lnf_bias].data(), dx.data());

  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<T> qh(L * dh), kh(L * dh), vh(L * dh), dch(L * dh), dP(L * L), dS(L * L);
  std::vector<T> dqh(L * dh), dkh(L * dh), dvh(L * dh);

  for (std::size_t li = c.n_layers; li-- > 0;) {
    const auto& ls = s.layers[li];
    const auto& lc = fc.layers[li];

    // Feed-forward residual branch: x_out = x_mid + drop(ff(LN2(x_mid))).
    std::vector<T> dff(dx);
    if (!lc.drop_ff.empty()) {
      for (std::size_t i = 0; i < N * D; ++i) dff[i] *= lc.drop_ff[i];
    }
    std::vector<T> dact(N * F);
    affine_backward(N, F, D, lc.ff_act.data(), p[ls.w2].data(), dff.data(), g[ls.w2].data(),
                    g[ls.b2].data(), dact.data(), false);
    for (std::size_t i = 0; i < N * F; ++i) dact[i] *= gelu_grad(lc.ff_pre[i]);
    std::vector<T> dh2(N * D);
    affine_backward(N, D, F, lc.h2.data(), p[ls.w1].data(), dact.data(), g[ls.w1].data(),
                    g[ls.b1].data(), dh2.data(), false);
    layer_norm_backward(N, D, lc.ln2_xhat.data(), lc.ln2_rstd.data(), p[ls.ln2_gain].data(),
                        dh2.data(), g[ls.ln2_gain].data(), g[ls.ln2_bias].data(), dx.data());

    // Attention residual branch: x_mid = x_in + drop(attn(LN1(x_in))).
    std::vector<T> dattn(dx);
    if (!lc.drop_attn.empty()) {
      for (std::size_t i = 0; i < N * D; ++i) dattn[i] *= lc.drop_attn[i];
    }
    std::vector<T> dctx(N * D);
    affine_backward(N, D, D, lc.ctx.data(), p[ls.wo].data(), dattn.data(), g[ls.wo].data(),
                    g[ls.bo].data(), dctx.data(), false);

    std::vector<T> dq(N * D, T(0)), dk(N * D, T(0)), dv(N * D, T(0));
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t h = 0; h < H; ++h) {
        const T* P = lc.probs.data() + ((b * H + h) * L) * L;
        gather_head(lc.q.data(), b, h, L, D, dh, qh.data());
        gather_head(lc.k.data(), b, h, L, D, dh, kh.data());
        gather_head(lc.v.data(), b, h, L, D, dh, vh.data());
        gather_head(dctx.data(), b, h, L, D, dh, dch.data());
        // ctx = P V
        kernels::gemm_nt(L, dh, L, dch.data(), vh.data(), dP.data(), false);
        kernels::gemm_tn(L, L, dh, P, dch.data(), dvh.data(), false);
        // softmax backward, then the 1/sqrt(dh) scale
        for (std::size_t i = 0; i < L; ++i) {
          T dot = 0;
          for (std::size_t j = 0; j < L; ++j) dot += P[i * L + j] * dP[i * L + j];
          for (std::size_t j = 0; j < L; ++j) {
            dS[i * L + j] = P[i * L + j] * (dP[i * L + j] - dot) * scale;
          }
        }
        // S = Q K^T
        kernels::gemm_nn(L, L, dh, dS.data(), kh.data(), dqh.data(), false);
        kernels::gemm_tn(L, L, dh, dS.data(), qh.data(), dkh.data(), false);
        scatter_head_add(dqh.data(), b, h, L, D, dh, dq.data());
        scatter_head_add(dkh.data(), b, h, L, D, dh, dk.data());
        scatter_head_add(dvh.data(), b, h, L, D, dh, dv.data());
      }
    }

    std::vector<T> dh1(N * D);
    affine_backward(N, D, D, lc.h1.data(), p[ls.wq].data(), dq.data(), g[ls.wq].data(),
                    g[ls.bq].data(), dh1.data(), false);
    affine_backward(N, D, D, lc.h1.data(), p[ls.wk].data(), dk.data(), g[ls.wk].data(),
                    g[ls.bk].data(), dh1.data(), true);
    affine_backward(N, D, D, lc.h1.data(), p[ls.wv].data(), dv.data(), g[ls.wv].data(),
                    g[ls.bv].data(), dh1.data(), true);
    layer_norm_backward(N, D, lc.ln1_xhat.data(), lc.ln1_rstd.data(), p[ls.ln1_gain].data(),
                        dh1.data(), g[ls.ln1_gain].data(), g[ls.ln1_bias].data(), dx.data());
  }

  if (!fc.drop_embed.empty()) {
    for (std::size_t i = 0; i < N * D; ++i) dx[i] *= fc.drop_embed[i];
  }
  auto& gtok = g[s.tok_emb];
  auto& gpos = g[s.pos_emb];
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < L; ++t) {
      const auto id = static_cast<std::size_t>(batch.ids[b * L + t]);
      const T* d = dx.data() + (b * L + t) * D;
      kernels::axpy(D, T(1), d, gtok.data() + id * D);
      kernels::axpy(D, T(1), d, gpos.data() + t * D);
    }
  }
}

template <class T>
BasicTensor<T> lm_logits(const BasicEncoderModel<T>& model, const BasicTensor<T>& hidden) {
  const std::size_t D = model.config.d_model, V = model.config.vocab_size;
  if (hidden.rank() != 3 || hidden.dim(2) != D) throw std::invalid_argument("hidden must be [B,L,D]");
  const std::size_t N = hidden.dim(0) * hidden.dim(1);
  BasicTensor<T> logits({hidden.dim(0), hidden.dim(1), V});
  kernels::gemm_nt(N, D, V, hidden.data(), model.params[model.slots.tok_emb].data(), logits.data(),
                   false);
  const T* bias = model.params[model.slots.out_bias].data();
  for (std::size_t r = 0; r < N; ++r) {
    T* row = logits.data() + r * V;
    for (std::size_t j = 0; j < V; ++j) row[j] += bias[j];
  }
  return logits;
}

template <class T>
std::vector<T> lm_logits_backward(const BasicEncoderModel<T>& model, const BasicTensor<T>& hidden,
                                  std::span<const T> d_logits, BasicParams<T>& grads) {
  const std::size_t D = model.config.d_model, V = model.config.vocab_size;
  const std::size_t N = hidden.size() / D;
  if (d_logits.size() != N * V) throw std::invalid_argument("d_logits has the wrong size");
  const auto& emb = model.params[model.slots.tok_emb];
  // dE[V,D] += dlogits[N,V]^T hidden[N,D]
  kernels::gemm_tn(V, N, D, d_logits.data(), hidden.data(), grads[model.slots.tok_emb].data(),
                   true);
  T* db = grads[model.slots.out_bias].data();
  for (std::size_t r = 0; r < N; ++r) {
    const T* row = d_logits.data() + r * V;
    for (std::size_t j = 0; j < V; ++j) db[j] += row[j];
  }
  std::vector<T> d_hidden(N * D);
  kernels::gemm_nn(N, V, D, d_logits.data(), emb.data(), d_hidden.data(), false);
  return d_hidden;
}

template <class T>
LmLossResult lm_loss(std::span<const T> logits, std::size_t vocab, std::span<const TokenId> labels,
                     std::span<const std::uint8_t> predict_mask, std::vector<T>* d_logits) {
  const std::size_t rows = labels.size();
  if (logits.size() != rows * vocab || predict_mask.size() != rows) {
    throw std::invalid_argument("lm_loss: misaligned shapes");
  }
  std::size_t count = 0;
  for (auto m : predict_mask) count += m ? 1 : 0;
  if (count == 0) throw std::invalid_argument("no predictions in batch");
  if (d_logits) d_logits->assign(rows * vocab, T(0));

  double total = 0.0;
  std::size_t correct = 0;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!predict_mask[r]) continue;
    const auto label = static_cast<std::size_t>(labels[r]);
    if (labels[r] < 0 || label >= vocab) throw std::invalid_argument("label out of range");
    const T* row = logits.data() + r * vocab;
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < vocab; ++j) {
      if (row[j] > row[argmax]) argmax = j;
    }
    const double mx = static_cast<double>(row[argmax]);
    double sum = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
    const double log_z = mx + std::log(sum);
    total += log_z - static_cast<double>(row[label]);
    if (argmax == label) ++correct;
    if (d_logits) {
      T* d = d_logits->data() + r * vocab;
      for (std::size_t j = 0; j < vocab; ++j) {
        d[j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - log_z) * inv);
      }
      d[label] -= static_cast<T>(inv);
    }
  }
  return {total * inv, static_cast<double>(correct) * inv, count};
}

template <class T>
void freeze_ins_gradient(const BasicEncoderModel<T>& model, BasicParams<T>& grads) {
  for (auto& x : grads[model.slots.tok_emb].row(static_cast<std::size_t>(text::kIns))) x = T(0);
}

template <class T>
LmLossResult lm_forward_backward(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                                 std::span<const TokenId> labels,
                                 std::span<const std::uint8_t> predict_mask, BasicParams<T>& grads,
                                 Rng* dropout_rng, bool freeze_ins) {
  BasicForwardCache<T> cache;
  auto hidden = encoder_forward(model, batch, &cache, dropout_rng);
  auto logits = lm_logits(model, hidden);
  std::vector<T> d_logits;
  auto result = lm_loss<T>(logits.span(), model.config.vocab_size, labels, predict_mask, &d_logits);
  auto d_hidden = lm_logits_backward<T>(model, hidden, d_logits, grads);
  encoder_backward<T>(model, batch, cache, d_hidden, grads);
  if (freeze_ins) freeze_ins_gradient(model, grads);
  return result;
}

template <class T>
LmLossResult lm_evaluate(const BasicEncoderModel<T>& model, const TokenBatch& batch,
                         std::span<const TokenId> labels,
                         std::span<const std::uint8_t> predict_mask) {
  auto hidden = encoder_forward(model, batch);
  auto logits = lm_logits(model, hidden);
  return lm_loss<T>(logits.span(), model.config.vocab_size, labels, predict_mask);
}

double perplexity(double mean_nll) { return std::exp(mean_nll); }

#define WLM_INSTANTIATE(T)                                                                       \
  template EncoderSlots register_encoder_params<T>(BasicParams<T>&, const ModelConfig&);         \
  template EncoderSlots bind_encoder_slots<T>(const BasicParams<T>&, const ModelConfig&);        \
  template BasicTensor<T> encoder_forward<T>(const BasicEncoderModel<T>&, const TokenBatch&,     \
                                             BasicForwardCache<T>*, Rng*);                       \
  template void encoder_backward<T>(const BasicEncoderModel<T>&, const TokenBatch&,              \
                                    const BasicForwardCache<T>&, std::span<const T>,             \
                                    BasicParams<T>&);                                            \
  template BasicTensor<T> lm_logits<T>(const BasicEncoderModel<T>&, const BasicTensor<T>&);      \
  template std::vector<T> lm_logits_backward<T>(const BasicEncoderModel<T>&,                     \
                                                const BasicTensor<T>&, std::span<const T>,       \
                                                BasicParams<T>&);                                \
  template LmLossResult lm_loss<T>(std::span<const T>, std::size_t, std::span<const TokenId>,    \
                                   std::span<const std::uint8_t>, std::vector<T>*);              \
  template void freeze_ins_gradient<T>(const BasicEncoderModel<T>&, BasicParams<T>&);            \
  template LmLossResult lm_forward_backward<T>(const BasicEncoderModel<T>&, const TokenBatch&,   \
                                               std::span<const TokenId>,                         \
                                               std::span<const std::uint8_t>, BasicParams<T>&,   \
                                               Rng*, bool);                                      \
  template LmLossResult lm_evaluate<T>(const BasicEncoderModel<T>&, const TokenBatch&,           \
                                       std::span<const TokenId>, std::span<const std::uint8_t>);

WLM_INSTANTIATE(float)
WLM_INSTANTIATE(double)

#undef WLM_INSTANTIATE

}  // namespace wlm::nn
