#include "wlm/nnet/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wlm/nnet/kernels.hpp"

namespace wlm::nn {

template <class T>
bool all_finite(const BasicParams<T>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (T x : params[i].values()) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

template <class T>
void adam_step(BasicParams<T>& params, const BasicParams<T>& grads, BasicAdamState<T>& state,
               const std::vector<std::pair<std::size_t, std::size_t>>& frozen) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw std::invalid_argument("adam: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape()) {
      throw std::invalid_argument("adam: gradient shape mismatch for " + params.name(i));
    }
  }
  if (!all_finite(grads)) throw std::runtime_error("divergence");

  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const T inv_bc1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
  const T inv_bc2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
  const T lr = static_cast<T>(cfg.lr), b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2), eps = static_cast<T>(cfg.eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const std::size_t n = p.size();
    std::vector<std::size_t> skip;
    for (const auto& [idx, row] : frozen) {
      if (idx == i) skip.push_back(row);
    }
    std::sort(skip.begin(), skip.end());
    const std::size_t width = skip.empty() ? n : n / p.dim(0);
    std::size_t begin = 0;
    auto run = [&](std::size_t lo, std::size_t hi) {
      if (hi <= lo) return;
      kernels::adam_update(hi - lo, p.data() + lo, grads[i].data() + lo, state.m[i].data() + lo,
                           state.v[i].data() + lo, lr, b1, b2, inv_bc1, inv_bc2, eps);
    };
    for (std::size_t row : skip) {
      run(begin, row * width);
      begin = (row + 1) * width;
    }
    run(begin, n);
  }
}

template void adam_step<float>(BasicParams<float>&, const BasicParams<float>&,
                               BasicAdamState<float>&,
                               const std::vector<std::pair<std::size_t, std::size_t>>&);
template void adam_step<double>(BasicParams<double>&, const BasicParams<double>&,
                                BasicAdamState<double>&,
                                const std::vector<std::pair<std::size_t, std::size_t>>&);
template bool all_finite<float>(const BasicParams<float>&);
template bool all_finite<double>(const BasicParams<double>&);

}  // namespace wlm::nn
