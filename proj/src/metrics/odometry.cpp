// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/metrics/odometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vawm/error.hpp"

namespace vawm::metrics {

using namespace sim;

namespace {

// Pearson correlation of `next` with `prev` sampled at the warped cell
// centres; NaN when the overlap is too small, 0 for constant signals.
double warped_ncc(const Frame& prev, const Frame& next, const FrameSpec& spec, const std::vector<Vec2>& rotated,
                  double dx, double dy, std::size_t min_cells) {
  const double inv = 1.0 / spec.meters_per_cell;
  const double ar = static_cast<double>(spec.anchor_row) + 0.5, ac = static_cast<double>(spec.anchor_col) + 0.5;
  const int H = static_cast<int>(prev.height), W = static_cast<int>(prev.width);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < rotated.size(); ++i) {
    // Centre-index coordinates in `prev` of the warped point.
    const double fr = ar - (dx + rotated[i].x) * inv - 0.5;
    const double fc = ac - (dy + rotated[i].y) * inv - 0.5;
    const int r0 = static_cast<int>(std::floor(fr)), c0 = static_cast<int>(std::floor(fc));
    if (r0 < 0 || c0 < 0 || r0 + 1 >= H || c0 + 1 >= W) continue;
    const double wr = fr - r0, wc = fc - c0;
    const float* row0 = prev.cells.data() + static_cast<std::size_t>(r0) * W;
    const float* row1 = row0 + W;
    const double a = (1 - wr) * ((1 - wc) * row0[c0] + wc * row0[c0 + 1]) + wr * ((1 - wc) * row1[c0] + wc * row1[c0 + 1]);
    const double b = next.cells[i];
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
    ++n;
  }
  if (n < min_cells) return std::numeric_limits<double>::quiet_NaN();
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn;
  const double vx = sxx - sx * sx / dn, vy = syy - sy * sy / dn;
  if (vx <= 1e-12 || vy <= 1e-12) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace

RelativePose register_pair(const Frame& prev, const Frame& next, const FrameSpec& spec, const OdometryGrid& grid) {
  if (prev.height != next.height || prev.width != next.width || prev.cells.size() != next.cells.size() ||
      prev.height != spec.height || prev.width != spec.width) {
    throw DimensionError("register_pair: frame shapes differ");
  }
  if (!(grid.shift_step > 0) || !(grid.yaw_step_deg > 0)) throw ParameterError("register_pair: grid steps must be positive");
  const int ns = static_cast<int>(std::lround(grid.max_shift / grid.shift_step));
  const int ny = static_cast<int>(std::lround(grid.max_yaw_deg / grid.yaw_step_deg));
  const std::size_t min_cells = static_cast<std::size_t>(std::ceil(grid.min_overlap * static_cast<double>(next.cells.size())));

  std::vector<Vec2> centres(next.cells.size());
  for (std::size_t r = 0; r < spec.height; ++r)
    for (std::size_t c = 0; c < spec.width; ++c)
      centres[r * spec.width + c] = spec.cell_to_ego(static_cast<double>(r) + 0.5, static_cast<double>(c) + 0.5);

  RelativePose best;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_mag = std::numeric_limits<double>::infinity();
  std::vector<Vec2> rotated(centres.size());
  for (int iy = -ny; iy <= ny; ++iy) {
    const double yaw = iy * grid.yaw_step_deg * std::numbers::pi / 180.0;
    const double c = std::cos(yaw), s = std::sin(yaw);
    for (std::size_t i = 0; i < centres.size(); ++i) {
      rotated[i] = {c * centres[i].x - s * centres[i].y, s * centres[i].x + c * centres[i].y};
    }
    for (int ix = -ns; ix <= ns; ++ix) {
      for (int jy = -ns; jy <= ns; ++jy) {
        const double dx = ix * grid.shift_step, dy = jy * grid.shift_step;
        const double score = warped_ncc(prev, next, spec, rotated, dx, dy, min_cells);
        if (std::isnan(score)) continue;
        const double mag = dx * dx + dy * dy + yaw * yaw;
        const bool better = score > best_score + grid.tie_tolerance;
        const bool tie = !better && std::abs(score - best_score) <= grid.tie_tolerance && mag < best_mag;
        if (better || tie) {
          best_score = std::max(best_score, score);
          best = {dx, dy, yaw};
          best_mag = mag;
        }
      }
    }
  }
  return best;
}

std::vector<RelativePose> estimate_odometry(const std::vector<Frame>& frames, const FrameSpec& spec,
                                            const OdometryGrid& grid) {
  if (frames.size() < 2) throw ContractError("estimate_odometry: need at least two frames");
  std::vector<RelativePose> out;
  for (std::size_t i = 1; i < frames.size(); ++i) out.push_back(register_pair(frames[i - 1], frames[i], spec, grid));
  return out;
}

std::vector<Vec2> chain_trajectory(const std::vector<RelativePose>& motions) {
  std::vector<Vec2> pts{{0.0, 0.0}};
  Pose2 pose;
  for (const auto& m : motions) {
    pose = compose(pose, Pose2{m.dx, m.dy, m.dyaw});
    pts.push_back(pose.position());
  }
  return pts;
}

}  // namespace vawm::metrics
