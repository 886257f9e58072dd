// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/metrics/consistency.hpp"

#include <algorithm>

#include "vawm/error.hpp"

namespace vawm::metrics {

using namespace sim;

double trajectory_consistency(const std::vector<Frame>& frames, const std::vector<Vec2>& trajectory,
                              const FrameSpec& spec, const OdometryGrid& grid) {
  if (frames.empty()) throw ContractError("trajectory_consistency: no frames");
  if (frames.size() != trajectory.size()) throw DimensionError("trajectory_consistency: frame/trajectory length mismatch");
  const auto odo = chain_trajectory(estimate_odometry(frames, spec, grid));
  const auto al = umeyama_align(odo, trajectory);
  const std::vector<Vec2> a(al.aligned.begin() + 1, al.aligned.end());
  const std::vector<Vec2> b(trajectory.begin() + 1, trajectory.end());
  return avg_l2(a, b);
}

namespace {

double path_length(const std::vector<Vec2>& pts) {
  double l = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) l += norm(pts[i] - pts[i - 1]);
  return l;
}

}  // namespace

ConsistencyReport consistency_report(const std::vector<rollout::RolloutLog>& logs,
                                     const std::function<Frame(const Frame&)>& reconstruct,
                                     const ConsistencyOptions& o) {
  ConsistencyReport rep;
  std::size_t n_gt = 0, n_pred = 0;
  for (const auto& log : logs) {
    ScenarioConsistency sc;
    sc.scenario_seed = log.scenario_seed;
    double pred_path_sum = 0.0;
    for (const auto& cyc : log.cycles) {
      // Realised column.
      if (cyc.step + o.horizon < log.steps.size()) {
        std::vector<Frame> frames;
        std::vector<Vec2> traj;
        for (std::size_t i = 0; i <= o.horizon; ++i) {
          const auto& st = log.steps[cyc.step + i];
          frames.push_back(st.frame);
          traj.push_back(to_local(cyc.plan_pose, st.pose.position()));
        }
        if (path_length(traj) >= o.min_path) {
          sc.gt_l2 += trajectory_consistency(frames, traj, o.spec, o.grid);
          ++sc.gt_cycles;
        } else {
          ++rep.skipped_cycles;
        }
      }
      // Predicted column.
      const std::size_t h = std::min({o.horizon, cyc.predicted_frames.size(), cyc.actions.size()});
      if (h >= 1 && cyc.step < log.steps.size()) {
        std::vector<Frame> frames{reconstruct(log.steps[cyc.step].frame)};
        std::vector<Vec2> traj{{0.0, 0.0}};
        for (std::size_t i = 0; i < h; ++i) {
          frames.push_back(cyc.predicted_frames[i]);
          traj.push_back(cyc.actions[i].position());
        }
        const double len = path_length(traj);
        if (len >= o.min_path) {
          sc.pred_l2 += trajectory_consistency(frames, traj, o.spec, o.grid);
          pred_path_sum += len;
          ++sc.pred_cycles;
        } else {
          ++rep.skipped_cycles;
        }
      }
    }
    if (sc.gt_cycles > 0) {
      sc.gt_l2 /= static_cast<double>(sc.gt_cycles);
      rep.gt_l2 += sc.gt_l2;
      ++n_gt;
    }
    if (sc.pred_cycles > 0) {
      sc.pred_l2 /= static_cast<double>(sc.pred_cycles);
      sc.pred_path = pred_path_sum / static_cast<double>(sc.pred_cycles);
      sc.pred_ratio = sc.pred_l2 / sc.pred_path;
      rep.pred_l2 += sc.pred_l2;
      rep.pred_ratio += sc.pred_ratio;
      ++n_pred;
    }
    rep.scenarios.push_back(sc);
  }
  if (n_gt > 0) rep.gt_l2 /= static_cast<double>(n_gt);
  if (n_pred > 0) {
    rep.pred_l2 /= static_cast<double>(n_pred);
    rep.pred_ratio /= static_cast<double>(n_pred);
  }
  return rep;
}

}  // namespace vawm::metrics
