// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vawm/rollout/rollout.hpp"

namespace vawm::metrics {

/// Frozen benchmark constants, written into every report header.
struct MetricConstants {
  double ttc_horizon = 1.0;    // s
  double ttc_substep = 0.1;    // s
  double max_accel = 4.0;      // m/s^2
  double max_jerk = 8.0;       // m/s^3
  double min_expert_progress = 0.5;  // m; below this EP is 1 by definition
};

struct SubScores {
  double nc = 1.0;
  double dac = 1.0;
  double ttc = 1.0;
  double comfort = 1.0;
  double ep = 1.0;
};

double no_collision(const rollout::RolloutLog& log);
double drivable_area_compliance(const rollout::RolloutLog& log);
double ttc_score(const sim::Scenario& s, const rollout::RolloutLog& log, const MetricConstants& k = {});
double comfort(const rollout::RolloutLog& log, const MetricConstants& k = {});
/// Centerline arc progress from the end of warm-up, relative to the expert.
double ego_progress(const sim::Scenario& s, const rollout::RolloutLog& log, const rollout::RolloutLog& expert,
                    const MetricConstants& k = {});

/// NC * DAC * (5 EP + 5 TTC + 2 C) / 12.
double pdms(const SubScores& sub);

SubScores score_rollout(const sim::Scenario& s, const rollout::RolloutLog& log, const rollout::RolloutLog& expert,
                        const MetricConstants& k = {});

struct FleetScores {
  SubScores mean;       // per-metric averages, for the table columns
  double pdms = 0.0;    // mean of per-scenario PDMS
  std::size_t scenarios = 0;
};

FleetScores fleet(const std::vector<SubScores>& per_scenario);

}  // namespace vawm::metrics
