// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "vawm/diffcore/tape.hpp"

namespace vawm::diffcore {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// First/second moments mirror the parameter shapes; `step` counts updates.
template <typename T>
struct AdamWState {
  AdamWConfig config;
  std::vector<NdArray<T>> m;
  std::vector<NdArray<T>> v;
  std::uint64_t step = 0;
};

template <typename T>
AdamWState<T> make_adamw_state(const ParameterStore<T>& params, AdamWConfig config);

/// One AdamW update from the gradients held in `params` at learning rate
/// `lr`. Weight decay is decoupled: parameters are scaled by
/// (1 - lr * weight_decay) before the bias-corrected moment step.
template <typename T>
void adamw_step(ParameterStore<T>& params, AdamWState<T>& state, double lr);

/// Linear warm-up from `start_factor * base_lr` to `base_lr` over
/// `warmup_steps`, constant afterwards.
double warmup_lr(double base_lr, std::uint64_t step, std::uint64_t warmup_steps, double start_factor = 1e-3);

}  // namespace vawm::diffcore
