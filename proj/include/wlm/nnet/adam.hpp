#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wlm/nnet/tensor.hpp"

namespace wlm::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

template <class T>
struct BasicAdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  BasicParams<T> m;
  BasicParams<T> v;

  BasicAdamState() = default;
  BasicAdamState(const BasicParams<T>& params, AdamConfig cfg)
      : config(cfg), m(params.zeros_like()), v(params.zeros_like()) {}
};

using AdamState = BasicAdamState<float>;

/// One bias-corrected Adam update. Rows listed in `frozen` are skipped
/// entirely (parameters and moments stay bit-identical). Throws
/// std::runtime_error("divergence") if any gradient is non-finite; in that
/// case nothing is modified.
template <class T>
void adam_step(BasicParams<T>& params, const BasicParams<T>& grads, BasicAdamState<T>& state,
               const std::vector<std::pair<std::size_t, std::size_t>>& frozen = {});

template <class T>
bool all_finite(const BasicParams<T>& params);

}  // namespace wlm::nn
