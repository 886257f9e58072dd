// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/diffcore/optim.hpp"

#include <algorithm>
#include <cmath>

namespace vawm::diffcore {

template <typename T>
AdamWState<T> make_adamw_state(const ParameterStore<T>& params, AdamWConfig config) {
  if (config.lr < 0 || config.weight_decay < 0 || config.eps <= 0 || config.beta1 < 0 || config.beta1 >= 1 ||
      config.beta2 < 0 || config.beta2 >= 1) {
    throw ParameterError("adamw: invalid hyperparameters");
  }
  AdamWState<T> st;
  st.config = config;
  for (const auto& p : params) {
    st.m.emplace_back(p.value.shape());
    st.v.emplace_back(p.value.shape());
  }
  return st;
}

template <typename T>
void adamw_step(ParameterStore<T>& params, AdamWState<T>& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adamw_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " tensors, store has " + std::to_string(params.size()));
  }
  if (lr < 0) throw ParameterError("adamw_step: negative learning rate");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i].value.shape() || params[i].grad.shape() != params[i].value.shape()) {
      throw DimensionError("adamw_step: shape mismatch for '" + params[i].name + "'");
    }
  }
  const auto& c = state.config;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T decay = static_cast<T>(1.0 - lr * c.weight_decay);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T step_size = static_cast<T>(lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(c.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i].value.ptr();
    const T* g = params[i].grad.ptr();
    T* m = state.m[i].ptr();
    T* v = state.v[i].ptr();
    const std::size_t n = params[i].value.size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      p[j] *= decay;
      p[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

double warmup_lr(double base_lr, std::uint64_t step, std::uint64_t warmup_steps, double start_factor) {
  if (warmup_steps == 0 || step >= warmup_steps) return base_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(warmup_steps);
  return base_lr * (start_factor + (1.0 - start_factor) * frac);
}

template AdamWState<float> make_adamw_state<float>(const ParameterStore<float>&, AdamWConfig);
template AdamWState<double> make_adamw_state<double>(const ParameterStore<double>&, AdamWConfig);
template void adamw_step<float>(ParameterStore<float>&, AdamWState<float>&, double);
template void adamw_step<double>(ParameterStore<double>&, AdamWState<double>&, double);

}  // namespace vawm::diffcore
