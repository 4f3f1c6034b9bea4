// AVX2 + FMA float kernels. This translation unit is compiled with
// -mavx2 -mfma and must only be entered after the runtime cpuid check.

#include "wlm/nnet/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace wlm::nn::kernels::avx2 {

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// Accumulates sum_p scale(p) * B[p, j0:j0+W] into a C row segment held in
// registers. `a_at(p)` yields the broadcast coefficient for row p of B.
template <class CoefAt>
inline void row_update(std::size_t k, std::size_t n, const float* b, float* crow, bool accumulate,
                       CoefAt a_at) {
  std::size_t j = 0;
  for (; j + 32 <= n; j += 32) {
    __m256 c0 = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
    __m256 c1 = accumulate ? _mm256_loadu_ps(crow + j + 8) : _mm256_setzero_ps();
    __m256 c2 = accumulate ? _mm256_loadu_ps(crow + j + 16) : _mm256_setzero_ps();
    __m256 c3 = accumulate ? _mm256_loadu_ps(crow + j + 24) : _mm256_setzero_ps();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 av = _mm256_set1_ps(a_at(p));
      const float* brow = b + p * n + j;
      c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), c0);
      c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), c1);
      c2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 16), c2);
      c3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 24), c3);
    }
    _mm256_storeu_ps(crow + j, c0);
    _mm256_storeu_ps(crow + j + 8, c1);
    _mm256_storeu_ps(crow + j + 16, c2);
    _mm256_storeu_ps(crow + j + 24, c3);
  }
  for (; j + 8 <= n; j += 8) {
    __m256 c0 = accumulate ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
    for (std::size_t p = 0; p < k; ++p) {
      c0 = _mm256_fmadd_ps(_mm256_set1_ps(a_at(p)), _mm256_loadu_ps(b + p * n + j), c0);
    }
    _mm256_storeu_ps(crow + j, c0);
  }
  for (; j < n; ++j) {
    float acc = accumulate ? crow[j] : 0.0f;
    for (std::size_t p = 0; p < k; ++p) acc = std::fma(a_at(p), b[p * n + j], acc);
    crow[j] = acc;
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    row_update(k, n, b, c + i * n, accumulate, [arow](std::size_t p) { return arow[p]; });
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    row_update(k, n, b, c + i * n, accumulate, [a, m, i](std::size_t p) { return a[p * m + i]; });
  }
}

float dot(std::size_t n, const float* x, const float* y) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc = std::fma(x[i], y[i], acc);
  return acc;
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + j * k;
      const float* b1 = b0 + k;
      const float* b2 = b1 + k;
      const float* b3 = b2 + k;
      __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
      __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
      std::size_t p = 0;
      for (; p + 8 <= k; p += 8) {
        const __m256 av = _mm256_loadu_ps(arow + p);
        s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), s0);
        s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), s1);
        s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), s2);
        s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), s3);
      }
      float r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 = std::fma(arow[p], b0[p], r0);
        r1 = std::fma(arow[p], b1[p], r1);
        r2 = std::fma(arow[p], b2[p], r2);
        r3 = std::fma(arow[p], b3[p], r3);
      }
      if (accumulate) {
        crow[j] += r0;
        crow[j + 1] += r1;
        crow[j + 2] += r2;
        crow[j + 3] += r3;
      } else {
        crow[j] = r0;
        crow[j + 1] = r1;
        crow[j + 2] = r2;
        crow[j + 3] = r3;
      }
    }
    for (; j < n; ++j) {
      const float r = dot(k, arow, b + j * k);
      crow[j] = accumulate ? crow[j] + r : r;
    }
  }
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps) {
  const __m256 vb1 = _mm256_set1_ps(beta1), vb1c = _mm256_set1_ps(1.0f - beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2), vb2c = _mm256_set1_ps(1.0f - beta2);
  const __m256 vbc1 = _mm256_set1_ps(inv_bc1), vbc2 = _mm256_set1_ps(inv_bc2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vb1c, gv));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(_mm256_mul_ps(vb2c, gv), gv));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    const __m256 mhat = _mm256_mul_ps(mv, vbc1);
    const __m256 vhat = _mm256_mul_ps(vv, vbc2);
    const __m256 step =
        _mm256_div_ps(_mm256_mul_ps(vlr, mhat), _mm256_add_ps(_mm256_sqrt_ps(vhat), veps));
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] * inv_bc1) / (std::sqrt(v[i] * inv_bc2) + eps);
  }
}

bool compiled() { return true; }

}  // namespace wlm::nn::kernels::avx2

#else  // no AVX2 in this build: forward to the reference path

namespace wlm::nn::kernels::avx2 {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  scalar::gemm_nn(m, k, n, a, b, c, accumulate);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  scalar::gemm_nt(m, k, n, a, b, c, accumulate);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  scalar::gemm_tn(m, k, n, a, b, c, accumulate);
}
float dot(std::size_t n, const float* x, const float* y) { return scalar::dot(n, x, y); }
void axpy(std::size_t n, float alpha, const float* x, float* y) { scalar::axpy(n, alpha, x, y); }
void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps) {
  scalar::adam_update(n, p, g, m, v, lr, beta1, beta2, inv_bc1, inv_bc2, eps);
}

bool compiled() { return false; }

}  // namespace wlm::nn::kernels::avx2

#endif
