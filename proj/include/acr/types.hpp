#pragma once

#include <array>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace acr {

inline constexpr int kNumParts = 16;         // kinematic joints == skinning parts
inline constexpr int kNumJoints = 21;        // 16 kinematic joints + 5 fingertips
inline constexpr int kNumBones = 20;
inline constexpr int kNumShape = 10;
inline constexpr int kPoseDims = kNumParts * 6;                 // 96
inline constexpr int kParamDims = kPoseDims + kNumShape + 3;    // 109
inline constexpr int kPoseShapeDims = kPoseDims + kNumShape;    // 106

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-per-point containers.
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Mesh = Points3;
using Joints3 = Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>;
using Joints2 = Eigen::Matrix<double, kNumJoints, 2, Eigen::RowMajor>;
using BoneLengths = Eigen::Matrix<double, kNumBones, 1>;

using Pose6d = Eigen::Matrix<double, kNumParts, 6, Eigen::RowMajor>;
using ShapeCoeffs = Eigen::Matrix<double, kNumShape, 1>;
using ParamVector = Eigen::Matrix<double, kParamDims, 1>;

enum class Handedness { Left = 0, Right = 1 };

inline constexpr std::array<Handedness, 2> kBothHands = {Handedness::Left, Handedness::Right};

constexpr int index_of(Handedness h) { return static_cast<int>(h); }
constexpr Handedness opposite(Handedness h) {
  return h == Handedness::Left ? Handedness::Right : Handedness::Left;
}
constexpr std::string_view name_of(Handedness h) {
  return h == Handedness::Left ? "left" : "right";
}

// Weak-perspective camera: x2d = s * x3d + tx, y2d = s * y3d + ty (map pixels).
struct WeakCamera {
  double s = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  bool operator==(const WeakCamera&) const = default;
};

// Pose (16 x 6D), shape (10) and camera of one hand.
struct HandParams {
  Pose6d pose6d = identity_pose();
  ShapeCoeffs shape = ShapeCoeffs::Zero();
  WeakCamera camera;
  Handedness handedness = Handedness::Right;

  static Pose6d identity_pose() {
    Pose6d pose;
    for (int j = 0; j < kNumParts; ++j) pose.row(j) << 1, 0, 0, 0, 1, 0;
    return pose;
  }

  // Natural layout: pose6d row-major, shape, then (s, tx, ty) as-is.
  ParamVector flatten() const {
    ParamVector v;
    v.head<kPoseDims>() = Eigen::Map<const Eigen::Matrix<double, kPoseDims, 1>>(pose6d.data());
    v.segment<kNumShape>(kPoseDims) = shape;
    v(kPoseShapeDims) = camera.s;
    v(kPoseShapeDims + 1) = camera.tx;
    v(kPoseShapeDims + 2) = camera.ty;
    return v;
  }

  static HandParams unflatten(const ParamVector& v, Handedness side) {
    HandParams p;
    p.pose6d = Eigen::Map<const Pose6d>(v.data());
    p.shape = v.segment<kNumShape>(kPoseDims);
    p.camera = {v(kPoseShapeDims), v(kPoseShapeDims + 1), v(kPoseShapeDims + 2)};
    p.handedness = side;
    return p;
  }

  bool operator==(const HandParams& o) const {
    return pose6d == o.pose6d && shape == o.shape && camera == o.camera &&
           handedness == o.handedness;
  }
};

}  // namespace acr
