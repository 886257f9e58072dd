// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "vawm/metrics/alignment.hpp"
#include "vawm/metrics/odometry.hpp"
#include "vawm/rollout/rollout.hpp"

namespace vawm::metrics {

/// Average L2 over the future points after aligning odometry of `frames`
/// (origin frame first) to `trajectory` (origin first). Both hold n+1 entries.
double trajectory_consistency(const std::vector<sim::Frame>& frames, const std::vector<sim::Vec2>& trajectory,
                              const sim::FrameSpec& spec = {}, const OdometryGrid& grid = {});

struct ScenarioConsistency {
  std::uint64_t scenario_seed = 0;
  std::size_t gt_cycles = 0;
  std::size_t pred_cycles = 0;
  double gt_l2 = 0.0;
  double pred_l2 = 0.0;
  double pred_path = 0.0;   // mean predicted path length over the horizon
  double pred_ratio = 0.0;  // pred_l2 / pred_path
};

struct ConsistencyReport {
  std::vector<ScenarioConsistency> scenarios;
  double gt_l2 = 0.0;       // mean over scenarios with at least one usable cycle
  double pred_l2 = 0.0;
  double pred_ratio = 0.0;
  std::size_t skipped_cycles = 0;  // degenerate (near-stationary) references
};

struct ConsistencyOptions {
  std::size_t horizon = 8;
  double min_path = 0.5;  // m; shorter references have no defined shape to align
  sim::FrameSpec spec;
  OdometryGrid grid;
};

/// `reconstruct` maps the realised planning frame through the codec so the
/// predicted column compares decoded frames with decoded frames.
ConsistencyReport consistency_report(const std::vector<rollout::RolloutLog>& logs,
                                     const std::function<sim::Frame(const sim::Frame&)>& reconstruct,
                                     const ConsistencyOptions& options = {});

}  // namespace vawm::metrics
