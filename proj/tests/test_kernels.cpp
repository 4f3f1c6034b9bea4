#include <cmath>
#include <vector>

#include "doctest.h"
#include "wlm/core/rng.hpp"
#include "wlm/nnet/kernels.hpp"

using namespace wlm::nn;

namespace {

std::vector<float> random_vec(wlm::Rng& rng, std::size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

// Float sums of k terms differ by reassociation/FMA; scale tolerance with k.
void check_close(const std::vector<float>& a, const std::vector<float>& b, std::size_t k) {
  REQUIRE(a.size() == b.size());
  const double tol = 1e-6 * (4.0 + static_cast<double>(k));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(double(a[i]) - double(b[i])) <= tol * (1.0 + std::abs(double(a[i]))));
  }
}

}  // namespace

TEST_CASE("backend selection") {
  CHECK(kernels::backend_supported(kernels::Backend::Scalar));
  const auto original = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  if (kernels::backend_supported(kernels::Backend::Avx2)) {
    kernels::set_backend(kernels::Backend::Avx2);
    CHECK(kernels::active_backend() == kernels::Backend::Avx2);
  } else {
    CHECK_THROWS(kernels::set_backend(kernels::Backend::Avx2));
  }
  kernels::set_backend(original);
  CHECK(kernels::backend_name(kernels::Backend::Avx2) == "avx2");
}

TEST_CASE("scalar reference against a double-precision triple loop") {
  wlm::Rng rng(3);
  const std::size_t m = 5, k = 7, n = 9;
  auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
  std::vector<float> c(m * n);
  kernels::scalar::gemm_nn(m, k, n, a.data(), b.data(), c.data(), false);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += double(a[i * k + p]) * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(acc).epsilon(1e-5));
    }
  }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  if (!kernels::backend_supported(kernels::Backend::Avx2)) {
    MESSAGE("AVX2 not available; skipping equivalence sweep");
    return;
  }
  wlm::Rng rng(17);
  const std::size_t sizes[] = {1, 2, 3, 7, 8, 9, 15, 16, 17, 31, 32, 33, 40, 64, 65};
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t m = sizes[rng.below(15)], k = sizes[rng.below(15)], n = sizes[rng.below(15)];
    const bool acc = rng.bernoulli(0.5);
    CAPTURE(m);
    CAPTURE(k);
    CAPTURE(n);
    auto a = random_vec(rng, m * k), b = random_vec(rng, k * n), c0 = random_vec(rng, m * n);
    {
      auto cs = c0, cv = c0;
      kernels::scalar::gemm_nn(m, k, n, a.data(), b.data(), cs.data(), acc);
      kernels::avx2::gemm_nn(m, k, n, a.data(), b.data(), cv.data(), acc);
      check_close(cs, cv, k);
    }
    {
      auto bt = random_vec(rng, n * k);
      auto cs = c0, cv = c0;
      kernels::scalar::gemm_nt(m, k, n, a.data(), bt.data(), cs.data(), acc);
      kernels::avx2::gemm_nt(m, k, n, a.data(), bt.data(), cv.data(), acc);
      check_close(cs, cv, k);
    }
    {
      auto at = random_vec(rng, k * m);
      auto cs = c0, cv = c0;
      kernels::scalar::gemm_tn(m, k, n, at.data(), b.data(), cs.data(), acc);
      kernels::avx2::gemm_tn(m, k, n, at.data(), b.data(), cv.data(), acc);
      check_close(cs, cv, k);
    }
  }
  for (std::size_t n : {0, 1, 7, 8, 15, 16, 17, 100, 1000}) {
    auto x = random_vec(rng, n), y = random_vec(rng, n);
    CHECK(kernels::avx2::dot(n, x.data(), y.data()) ==
          doctest::Approx(kernels::scalar::dot(n, x.data(), y.data())).epsilon(1e-4).scale(1.0));
    auto ys = y, yv = y;
    kernels::scalar::axpy(n, 0.37f, x.data(), ys.data());
    kernels::avx2::axpy(n, 0.37f, x.data(), yv.data());
    check_close(ys, yv, 1);

    auto g = random_vec(rng, n);
    auto ps = x, pv = x;
    std::vector<float> ms(n, 0.1f), vs(n, 0.2f), mv = ms, vv = vs;
    kernels::scalar::adam_update(n, ps.data(), g.data(), ms.data(), vs.data(), 1e-3f, 0.9f, 0.999f,
                                 10.0f, 1000.0f, 1e-8f);
    kernels::avx2::adam_update(n, pv.data(), g.data(), mv.data(), vv.data(), 1e-3f, 0.9f, 0.999f,
                               10.0f, 1000.0f, 1e-8f);
    check_close(ps, pv, 1);
    check_close(ms, mv, 1);
    check_close(vs, vv, 1);
  }
}

TEST_CASE("AVX2 kernels are deterministic") {
  if (!kernels::backend_supported(kernels::Backend::Avx2)) return;
  wlm::Rng rng(5);
  auto a = random_vec(rng, 33 * 65), b = random_vec(rng, 65 * 17);
  std::vector<float> c1(33 * 17), c2(33 * 17);
  kernels::avx2::gemm_nn(33, 65, 17, a.data(), b.data(), c1.data(), false);
  kernels::avx2::gemm_nn(33, 65, 17, a.data(), b.data(), c2.data(), false);
  CHECK(c1 == c2);
}
