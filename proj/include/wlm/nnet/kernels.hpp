#pragma once

// Dense inner loops used by the encoder. Every float kernel has a scalar
// reference and, on x86-64, an AVX2/FMA variant chosen once at startup from
// cpuid. Double overloads always run the scalar reference (gradient checks).
//
// All matrices are row-major and densely packed. `accumulate` selects C += ...
// over C = ....

#include <cstddef>
#include <string_view>

namespace wlm::nn::kernels {

enum class Backend { Scalar, Avx2 };

/// Backend in use. Defaults to the best the CPU supports; the environment
/// variable WLM_KERNELS=scalar forces the reference path.
Backend active_backend();
void set_backend(Backend backend);  // throws if unsupported on this CPU
bool backend_supported(Backend backend);
std::string_view backend_name(Backend backend);

// C[M,N] (+)= A[M,K] * B[K,N]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
// C[M,N] (+)= A[M,K] * B[N,K]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
// C[M,N] (+)= A[K,M]^T * B[K,N]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
float dot(std::size_t n, const float* x, const float* y);
// y += alpha * x
void axpy(std::size_t n, float alpha, const float* x, float* y);
// One Adam update with bias-corrected moments:
//   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
//   p -= lr * (m * inv_bc1) / (sqrt(v * inv_bc2) + eps)
void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps);

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c, bool accumulate);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c, bool accumulate);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c, bool accumulate);
double dot(std::size_t n, const double* x, const double* y);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void adam_update(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
                 double beta1, double beta2, double inv_bc1, double inv_bc2, double eps);

// Direct entry points for equivalence tests.
namespace scalar {
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
float dot(std::size_t n, const float* x, const float* y);
void axpy(std::size_t n, float alpha, const float* x, float* y);
void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps);
}  // namespace scalar

namespace avx2 {
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate);
float dot(std::size_t n, const float* x, const float* y);
void axpy(std::size_t n, float alpha, const float* x, float* y);
void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps);
}  // namespace avx2

}  // namespace wlm::nn::kernels
