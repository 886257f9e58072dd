// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vawm::diffcore {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<Var<double>(Tape<double>&, Var<double>)>& f,
                           const NdArray<double>& x, double h) {
  if (!(h > 0)) throw ParameterError("grad_check: step h must be positive");
  NdArray<double> analytic;
  {
    Tape<double> tape;
    Var<double> xv = tape.variable(x);
    tape.backward(f(tape, xv));
    analytic = tape.grad(xv);
  }
  auto eval = [&](const NdArray<double>& at) {
    Tape<double> tape;
    return f(tape, tape.constant(at)).value().item();
  };
  GradCheckResult res;
  res.coordinates = x.size();
  NdArray<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = eval(probe);
    probe[i] = orig - h;
    const double down = eval(probe);
    probe[i] = orig;
    const double err = relative_error(analytic[i], (up - down) / (2 * h));
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_index = i;
    }
  }
  return res;
}

GradCheckResult grad_check_params(const std::function<Var<double>(Tape<double>&)>& f,
                                  ParameterStore<double>& params, double h, double floor) {
  if (!(h > 0)) throw ParameterError("grad_check: step h must be positive");
  params.zero_grad();
  {
    Tape<double> tape;
    tape.backward(f(tape));
  }
  auto eval = [&]() {
    Tape<double> tape;
    return f(tape).value().item();
  };
  GradCheckResult res;
  std::size_t flat = 0;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i, ++flat) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double up = eval();
      p.value[i] = orig - h;
      const double down = eval();
      p.value[i] = orig;
      const double err = relative_error(p.grad[i], (up - down) / (2 * h), floor);
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_index = flat;
      }
    }
  }
  res.coordinates = flat;
  return res;
}

}  // namespace vawm::diffcore
