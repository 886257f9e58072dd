// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/sim/geometry.hpp"

#include <algorithm>
#include <limits>

#include "vawm/error.hpp"

namespace vawm::sim {

Centerline::Centerline(std::vector<Vec2> points, std::vector<double> half_width)
    : points_(std::move(points)), half_width_(std::move(half_width)) {
  if (points_.size() < 2) throw ContractError("Centerline: need at least two points");
  if (half_width_.size() != points_.size()) throw DimensionError("Centerline: one half-width per vertex required");
  arc_.resize(points_.size());
  arc_[0] = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) arc_[i] = arc_[i - 1] + norm(points_[i] - points_[i - 1]);
}

std::size_t Centerline::segment_at(double s) const {
  if (s <= 0.0) return 0;
  auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  const std::size_t idx = static_cast<std::size_t>(it - arc_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, segment_count() - 1);
}

Vec2 Centerline::point_at(double s) const {
  const std::size_t i = segment_at(s);
  const double len = arc_[i + 1] - arc_[i];
  const double u = len > 0 ? (s - arc_[i]) / len : 0.0;
  return points_[i] + u * (points_[i + 1] - points_[i]);
}

double Centerline::heading_at(double s) const {
  const std::size_t i = segment_at(s);
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

double Centerline::half_width_at(double s) const {
  const std::size_t i = segment_at(s);
  const double len = arc_[i + 1] - arc_[i];
  const double u = len > 0 ? std::clamp((s - arc_[i]) / len, 0.0, 1.0) : 0.0;
  return half_width_[i] + u * (half_width_[i + 1] - half_width_[i]);
}

Projection Centerline::project(Vec2 p) const { return project(p, 0, segment_count()); }

Projection Centerline::project(Vec2 p, std::size_t first, std::size_t last) const {
  last = std::min(last, segment_count());
  if (first >= last) throw ContractError("Centerline::project: empty segment range");
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_u = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = points_[i + 1] - a;
    const double len2 = dot(d, d);
    double u = len2 > 0 ? dot(p - a, d) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const Vec2 foot = a + u * d;
    const Vec2 off = p - foot;
    const double d2 = dot(off, off);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_u = u;
      best.segment = i;
      best.lateral = len2 > 0 ? cross(d, p - a) / std::sqrt(len2) : 0.0;
    }
  }
  const std::size_t i = best.segment;
  best.arc = arc_[i] + best_u * (arc_[i + 1] - arc_[i]);
  best.distance = std::sqrt(best_d2);
  best.half_width = half_width_[i] + best_u * (half_width_[i + 1] - half_width_[i]);
  return best;
}

}  // namespace vawm::sim
