// Copyright 2026 The vawm Authors
// SPDX-License-Identifier: Apache-2.0

#include "vawm/metrics/alignment.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "vawm/error.hpp"

namespace vawm::metrics {

using sim::Vec2;

Vec2 Similarity2D::apply(Vec2 p) const {
  const double c = std::cos(rotation), s = std::sin(rotation);
  return {scale * (c * p.x - s * p.y) + translation.x, scale * (s * p.x + c * p.y) + translation.y};
}

Alignment umeyama_align(const std::vector<Vec2>& source, const std::vector<Vec2>& target) {
  if (source.size() != target.size()) throw DimensionError("umeyama_align: trajectories differ in length");
  if (source.size() < 2) throw ContractError("umeyama_align: need at least two points");
  const double n = static_cast<double>(source.size());
  Eigen::Vector2d mx = Eigen::Vector2d::Zero(), my = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    mx += Eigen::Vector2d(source[i].x, source[i].y);
    my += Eigen::Vector2d(target[i].x, target[i].y);
  }
  mx /= n;
  my /= n;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double var_x = 0.0, var_y = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::Vector2d dx = Eigen::Vector2d(source[i].x, source[i].y) - mx;
    const Eigen::Vector2d dy = Eigen::Vector2d(target[i].x, target[i].y) - my;
    cov += dy * dx.transpose();
    var_x += dx.squaredNorm();
    var_y += dy.squaredNorm();
  }
  cov /= n;
  var_x /= n;
  var_y /= n;
  if (var_y <= 1e-18) throw ContractError("umeyama_align: reference points coincide");

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d S = Eigen::Matrix2d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(1, 1) = -1.0;
  const Eigen::Matrix2d R = svd.matrixU() * S * svd.matrixV().transpose();
  const double scale = var_x > 1e-18 ? (svd.singularValues().asDiagonal() * S).trace() / var_x : 0.0;
  const Eigen::Vector2d t = my - scale * R * mx;

  Alignment a;
  a.transform.scale = scale;
  a.transform.rotation = std::atan2(R(1, 0), R(0, 0));
  a.transform.translation = {t.x(), t.y()};
  double sq = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Eigen::Vector2d p = scale * R * Eigen::Vector2d(source[i].x, source[i].y) + t;
    a.aligned.push_back({p.x(), p.y()});
    sq += (p - Eigen::Vector2d(target[i].x, target[i].y)).squaredNorm();
  }
  a.rms = std::sqrt(sq / n);
  return a;
}

double avg_l2(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.size() != b.size()) throw DimensionError("avg_l2: trajectories differ in length");
  if (a.empty()) throw ContractError("avg_l2: empty trajectory");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += sim::norm(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace vawm::metrics
