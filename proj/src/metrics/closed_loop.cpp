// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/metrics/closed_loop.hpp"

#include <algorithm>
#include <cmath>

#include "vawm/error.hpp"

namespace vawm::metrics {

using namespace sim;

double no_collision(const rollout::RolloutLog& log) {
  for (const auto& s : log.steps) {
    if (s.collision) return 0.0;
  }
  return 1.0;
}

double drivable_area_compliance(const rollout::RolloutLog& log) {
  for (const auto& s : log.steps) {
    if (s.off_corridor) return 0.0;
  }
  return 1.0;
}

double ttc_score(const Scenario& s, const rollout::RolloutLog& log, const MetricConstants& k) {
  const int n = static_cast<int>(std::lround(k.ttc_horizon / k.ttc_substep));
  for (const auto& st : log.steps) {
    const double c = std::cos(st.pose.yaw), sn = std::sin(st.pose.yaw);
    const Vec2 v{c * st.vx - sn * st.vy, sn * st.vx + c * st.vy};
    for (int i = 1; i <= n; ++i) {
      const double tau = i * k.ttc_substep;
      const Vec2 p = st.pose.position() + tau * v;
      if (collides(s, agents_at(s, st.time + tau), p)) return 0.0;
    }
  }
  return 1.0;
}

double comfort(const rollout::RolloutLog& log, const MetricConstants& k) {
  const auto& st = log.steps;
  std::vector<Vec2> vel, acc;
  for (std::size_t i = 1; i < st.size(); ++i) {
    vel.push_back((1.0 / kFrameDt) * (st[i].pose.position() - st[i - 1].pose.position()));
  }
  for (std::size_t i = 1; i < vel.size(); ++i) {
    acc.push_back((1.0 / kFrameDt) * (vel[i] - vel[i - 1]));
    if (norm(acc.back()) > k.max_accel) return 0.0;
  }
  for (std::size_t i = 1; i < acc.size(); ++i) {
    if (norm((1.0 / kFrameDt) * (acc[i] - acc[i - 1])) > k.max_jerk) return 0.0;
  }
  return 1.0;
}

namespace {

double progress(const Scenario& s, const rollout::RolloutLog& log) {
  if (log.steps.size() <= log.warmup_steps) return 0.0;
  const double a0 = s.centerline.project(log.steps[log.warmup_steps].pose.position()).arc;
  const double a1 = s.centerline.project(log.steps.back().pose.position()).arc;
  return a1 - a0;
}

}  // namespace

double ego_progress(const Scenario& s, const rollout::RolloutLog& log, const rollout::RolloutLog& expert,
                    const MetricConstants& k) {
  const double ref = progress(s, expert);
  if (ref <= k.min_expert_progress) return 1.0;
  return std::clamp(progress(s, log) / ref, 0.0, 1.0);
}

double pdms(const SubScores& sub) {
  auto binary = [](double v, const char* name) {
    if (v != 0.0 && v != 1.0) throw ParameterError(std::string("pdms: ") + name + " must be 0 or 1");
  };
  binary(sub.nc, "NC");
  binary(sub.dac, "DAC");
  binary(sub.ttc, "TTC");
  binary(sub.comfort, "Comfort");
  if (!(sub.ep >= 0.0 && sub.ep <= 1.0)) throw ParameterError("pdms: EP must lie in [0, 1]");
  return sub.nc * sub.dac * (5.0 * sub.ep + 5.0 * sub.ttc + 2.0 * sub.comfort) / 12.0;
}

SubScores score_rollout(const Scenario& s, const rollout::RolloutLog& log, const rollout::RolloutLog& expert,
                        const MetricConstants& k) {
  return SubScores{no_collision(log), drivable_area_compliance(log), ttc_score(s, log, k), comfort(log, k),
                   ego_progress(s, log, expert, k)};
}

FleetScores fleet(const std::vector<SubScores>& per_scenario) {
  FleetScores f;
  f.scenarios = per_scenario.size();
  if (per_scenario.empty()) return f;
  SubScores sum{0, 0, 0, 0, 0};
  double p = 0.0;
  for (const auto& s : per_scenario) {
    sum.nc += s.nc;
    sum.dac += s.dac;
    sum.ttc += s.ttc;
    sum.comfort += s.comfort;
    sum.ep += s.ep;
    p += pdms(s);
  }
  const double n = static_cast<double>(per_scenario.size());
  f.mean = SubScores{sum.nc / n, sum.dac / n, sum.ttc / n, sum.comfort / n, sum.ep / n};
  f.pdms = p / n;
  return f;
}

}  // namespace vawm::metrics
