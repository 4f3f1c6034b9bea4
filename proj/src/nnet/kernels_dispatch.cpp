#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "wlm/nnet/kernels.hpp"

namespace wlm::nn::kernels {

namespace avx2 {
bool compiled();
}

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
#if defined(__GNUC__) || defined(__clang__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("WLM_KERNELS"); env && std::string(env) == "scalar") {
    return Backend::Scalar;
  }
  return backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

bool backend_supported(Backend backend) {
  if (backend == Backend::Scalar) return true;
  static const bool ok = avx2::compiled() && cpu_has_avx2_fma();
  return ok;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_supported(backend)) {
    throw std::runtime_error("kernel backend not supported: " + std::string(backend_name(backend)));
  }
  current().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

#define WLM_DISPATCH(fn, ...)                                                      \
  (active_backend() == Backend::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  WLM_DISPATCH(gemm_nn, m, k, n, a, b, c, accumulate);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  WLM_DISPATCH(gemm_nt, m, k, n, a, b, c, accumulate);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c,
             bool accumulate) {
  WLM_DISPATCH(gemm_tn, m, k, n, a, b, c, accumulate);
}
float dot(std::size_t n, const float* x, const float* y) { return WLM_DISPATCH(dot, n, x, y); }
void axpy(std::size_t n, float alpha, const float* x, float* y) {
  WLM_DISPATCH(axpy, n, alpha, x, y);
}
void adam_update(std::size_t n, float* p, const float* g, float* m, float* v, float lr, float beta1,
                 float beta2, float inv_bc1, float inv_bc2, float eps) {
  WLM_DISPATCH(adam_update, n, p, g, m, v, lr, beta1, beta2, inv_bc1, inv_bc2, eps);
}

#undef WLM_DISPATCH

}  // namespace wlm::nn::kernels
