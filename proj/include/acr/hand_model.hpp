#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "acr/hand_rig.hpp"
#include "acr/rotation.hpp"
#include "acr/types.hpp"

namespace acr {

using JointJacobian = Eigen::Matrix<double, 3 * kNumJoints, kPoseShapeDims>;

// A validated rig plus the sparse caches used for posing. Posing is linear
// blend skinning (no pose correctives) of the shaped template, driven by the
// forward kinematics of the 16 decoded local rotations.
class HandModel {
 public:
  explicit HandModel(HandRig rig);

  const HandRig& rig() const { return rig_; }
  int vertex_count() const { return rig_.vertex_count(); }

  Mesh skin_mesh(const HandParams& params) const;
  Joints3 regress_joints(const Mesh& mesh) const;

  // Same as regress_joints(skin_mesh(params)) but only skins the vertices the
  // regressor reads.
  Joints3 posed_joints(const HandParams& params) const;

  // d(posed_joints) / d(pose6d, shape); row 3*joint + axis, column = entry of
  // the flattened 106-vector.
  JointJacobian joint_jacobian(const HandParams& params) const;

 private:
  template <typename T>
  struct Skinning {
    std::array<Eigen::Matrix<T, 3, 3>, kNumParts> rotation;
    std::array<Eigen::Matrix<T, 3, 1>, kNumParts> translation;
  };

  template <typename T>
  Skinning<T> pose_skeleton(const Eigen::Matrix<T, kNumParts, 6, Eigen::RowMajor>& pose,
                            const Eigen::Matrix<T, kNumShape, 1>& shape) const;

  template <typename T>
  Eigen::Matrix<T, 3, 1> skin_vertex(int v, const Skinning<T>& skinning,
                                     const Eigen::Matrix<T, kNumShape, 1>& shape) const;

  template <typename T>
  Eigen::Matrix<T, kNumJoints, 3> joints_from_support(const Skinning<T>& skinning,
                                                      const Eigen::Matrix<T, kNumShape, 1>& shape) const;

  HandRig rig_;
  Eigen::Matrix<double, 3 * kNumParts, kNumShape> joint_shape_basis_;
  std::vector<std::vector<std::pair<int, double>>> vertex_influences_;
  std::vector<std::vector<std::pair<int, double>>> regressor_rows_;
};

// Left and right models of one scene.
struct HandModelPair {
  HandModel left;
  HandModel right;

  const HandModel& operator[](Handedness h) const { return h == Handedness::Left ? left : right; }

  // Toy right rig from `seed`, left rig its mirror image.
  static HandModelPair toy(std::uint64_t seed = 0);
  static HandModelPair from_right(const HandRig& right);
};

template <int Rows>
Eigen::Matrix<double, Rows, 2, Eigen::RowMajor> project_weak_perspective(
    const Eigen::Matrix<double, Rows, 3, Eigen::RowMajor>& points, const WeakCamera& camera) {
  Eigen::Matrix<double, Rows, 2, Eigen::RowMajor> out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i, 0) = camera.s * points(i, 0) + camera.tx;
    out(i, 1) = camera.s * points(i, 1) + camera.ty;
  }
  return out;
}

BoneLengths bone_lengths(const Joints3& joints, const std::array<BoneEdge, kNumBones>& edges);

}  // namespace acr
