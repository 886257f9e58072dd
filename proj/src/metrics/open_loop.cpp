// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/metrics/open_loop.hpp"

#include "vawm/error.hpp"

namespace vawm::metrics {

using namespace sim;

OpenLoopReport open_loop_metrics(const std::vector<OpenLoopSample>& samples) {
  OpenLoopReport r;
  r.samples = samples.size();
  if (samples.empty()) return r;
  for (const auto& s : samples) {
    if (s.predicted.size() != s.ground_truth.size() || s.predicted.size() < kHorizonSteps.back()) {
      throw DimensionError("open_loop_metrics: prediction and ground truth must hold >= 6 aligned actions");
    }
    for (std::size_t h = 0; h < kHorizonSteps.size(); ++h) {
      const std::size_t i = kHorizonSteps[h] - 1;
      r.l2[h] += norm(s.predicted[i].position() - s.ground_truth[i].position());
      if (s.scenario != nullptr) {
        const double t = s.time + static_cast<double>(kHorizonSteps[h]) * kFrameDt;
        const Vec2 p = to_world(s.origin, s.predicted[i].position());
        r.collision_rate[h] += collides(*s.scenario, agents_at(*s.scenario, t), p) ? 1.0 : 0.0;
      }
    }
  }
  const double n = static_cast<double>(samples.size());
  for (std::size_t h = 0; h < 3; ++h) {
    r.l2[h] /= n;
    r.collision_rate[h] /= n;
  }
  r.l2_avg = (r.l2[0] + r.l2[1] + r.l2[2]) / 3.0;
  r.collision_avg = (r.collision_rate[0] + r.collision_rate[1] + r.collision_rate[2]) / 3.0;
  return r;
}

}  // namespace vawm::metrics
