#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mtft {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Grid = Eigen::ArrayXXd;  // row-major indexing convention: (row=y cell, col=x cell)

// One Gaussian mixture component with track metadata.
// mean layout is (cx, cy, w, h); covariance must stay SPD.
struct TargetTuple {
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Identity();
  double weight = 0.0;
  std::int64_t label = -1;  // -1 marks an unlabelled birth
  int age = 0;
  Vec2 motion = Vec2::Zero();
};

struct TargetSet {
  std::vector<TargetTuple> targets;
  int frame = 0;

  std::size_t size() const { return targets.size(); }
  bool empty() const { return targets.empty(); }
};

// Defaults applied to components spawned from measurements or orphan peaks.
struct BirthModel {
  Mat4 cov = Mat4::Identity() * 20.0;
  double weight = 0.5;
  int age = 5;
  Vec2 motion = Vec2::Zero();
};

}  // namespace mtft
