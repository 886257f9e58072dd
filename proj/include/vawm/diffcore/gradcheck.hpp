// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

#include "vawm/diffcore/tape.hpp"

namespace vawm::diffcore {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;  // flat coordinate (over all parameters for the store variant)
  std::size_t coordinates = 0;
};

/// Relative error used by the checks: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Compare the tape gradient of scalar f(x) against central differences
/// with step h at every coordinate of x.
GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&, Var<double>)>& f,
                           const NdArray<double>& x, double h);

/// Same check over every element of every parameter in `params`. `f` must
/// register the parameters on the tape it is handed.
GradCheckResult grad_check_params(const std::function<Var<double>(Tape<double>&)>& f,
                                  ParameterStore<double>& params, double h, double floor = 1e-6);

}  // namespace vawm::diffcore
