// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace vawm::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Planar pose; yaw is counter-clockwise from +x, the body frame has +x
/// forward and +y to the left.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2&, const Pose2&) = default;
};

inline Vec2 to_world(const Pose2& frame, Vec2 local) {
  const double c = std::cos(frame.yaw), s = std::sin(frame.yaw);
  return {frame.x + c * local.x - s * local.y, frame.y + s * local.x + c * local.y};
}

inline Vec2 to_local(const Pose2& frame, Vec2 world) {
  const double c = std::cos(frame.yaw), s = std::sin(frame.yaw);
  const double dx = world.x - frame.x, dy = world.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

/// `local` expressed in `frame`, mapped to the world.
inline Pose2 compose(const Pose2& frame, const Pose2& local) {
  const Vec2 p = to_world(frame, {local.x, local.y});
  return {p.x, p.y, wrap_angle(frame.yaw + local.yaw)};
}

/// `target` expressed in the body frame of `frame`.
inline Pose2 relative(const Pose2& frame, const Pose2& target) {
  const Vec2 p = to_local(frame, target.position());
  return {p.x, p.y, wrap_angle(target.yaw - frame.yaw)};
}

/// Closest-point query result against a polyline.
struct Projection {
  double arc = 0.0;      // arc length at the foot point
  double lateral = 0.0;  // signed offset, positive to the left of travel
  double distance = 0.0;
  double half_width = 0.0;
  std::size_t segment = 0;
};

/// Road centerline sampled as a polyline with a corridor half-width per vertex.
class Centerline {
 public:
  Centerline() = default;
  Centerline(std::vector<Vec2> points, std::vector<double> half_width);

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& half_width() const { return half_width_; }
  const std::vector<double>& arc() const { return arc_; }
  double length() const { return arc_.empty() ? 0.0 : arc_.back(); }
  std::size_t segment_count() const { return points_.size() < 2 ? 0 : points_.size() - 1; }

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  double half_width_at(double s) const;
  std::size_t segment_at(double s) const;

  /// Closest point over all segments.
  Projection project(Vec2 p) const;
  /// Closest point over segments [first, last).
  Projection project(Vec2 p, std::size_t first, std::size_t last) const;

 private:
  std::vector<Vec2> points_;
  std::vector<double> half_width_;
  std::vector<double> arc_;
};

}  // namespace vawm::sim
