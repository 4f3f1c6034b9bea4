#include "kernels_ref.hpp"
#include "wlm/nnet/kernels.hpp"

namespace wlm::nn::kernels {

namespace scalar {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  ref::gemm_nn(m, k, n, a, b, c, accumulate);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  ref::gemm_nt(m, k, n, a, b, c, accumulate);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  ref::gemm_tn(m, k, n, a, b, c, accumulate);
}
float dot(std::size_t n, const float* x, const float* y) { return ref::dot(n, x, y); }
void axpy(std::size_t n, float alpha, const float* x, float* y) { ref::axpy(n, alpha, x, y); }
void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps) {
  ref::adam_update(n, p, g, m, v, lr, beta1, beta2, inv_bc1, inv_bc2, eps);
}

}  // namespace scalar

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c, bool accumulate) {
  ref::gemm_nn(m, k, n, a, b, c, accumulate);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c, bool accumulate) {
  ref::gemm_nt(m, k, n, a, b, c, accumulate);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c, bool accumulate) {
  ref::gemm_tn(m, k, n, a, b, c, accumulate);
}
double dot(std::size_t n, const double* x, const double* y) { return ref::dot(n, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { ref::axpy(n, alpha, x, y); }
void adam_update(std::size_t n, double* p, const double* g, double* m, double* v, double lr,
                 double beta1, double beta2, double inv_bc1, double inv_bc2, double eps) {
  ref::adam_update(n, p, g, m, v, lr, beta1, beta2, inv_bc1, inv_bc2, eps);
}

}  // namespace wlm::nn::kernels
