#include "acr/hand_model.hpp"

#include <algorithm>

#include <unsupported/Eigen/AutoDiff>

namespace acr {

HandModel::HandModel(HandRig rig) : rig_(std::move(rig)) {
  validate_rig(rig_);
  const int v_count = rig_.vertex_count();

  joint_shape_basis_.setZero();
  for (int j = 0; j < kNumParts; ++j) {
    for (int v = 0; v < v_count; ++v) {
      const double w = rig_.joint_regressor(j, v);
      if (w != 0.0) joint_shape_basis_.block<3, kNumShape>(3 * j, 0) += w * rig_.shape_basis.block<3, kNumShape>(3 * v, 0);
    }
  }

  vertex_influences_.resize(v_count);
  for (int v = 0; v < v_count; ++v) {
    for (int j = 0; j < kNumParts; ++j) {
      const double w = rig_.skin_weights(v, j);
      if (w != 0.0) vertex_influences_[v].emplace_back(j, w);
    }
  }

  regressor_rows_.resize(kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) {
    for (int v = 0; v < v_count; ++v) {
      const double w = rig_.joint_regressor(j, v);
      if (w != 0.0) regressor_rows_[j].emplace_back(v, w);
    }
  }
}

template <typename T>
HandModel::Skinning<T> HandModel::pose_skeleton(const Eigen::Matrix<T, kNumParts, 6, Eigen::RowMajor>& pose,
                                                const Eigen::Matrix<T, kNumShape, 1>& shape) const {
  using Vec3T = Eigen::Matrix<T, 3, 1>;
  using Mat3T = Eigen::Matrix<T, 3, 3>;
  Skinning<T> out;
  for (int j = 0; j < kNumParts; ++j) {
    const Eigen::Matrix<T, 6, 1> r6 = pose.row(j).transpose();
    const Mat3T local = rot6d_to_matrix<T>(r6);
    const Vec3T joint = rig_.rest_joints.row(j).transpose().template cast<T>() +
                        joint_shape_basis_.block<3, kNumShape>(3 * j, 0).template cast<T>() * shape;
    // Local transform about the joint: x -> R (x - J) + J.
    const Vec3T local_t = joint - local * joint;
    const int p = rig_.parent[j];
    if (p < 0) {
      out.rotation[j] = local;
      out.translation[j] = local_t;
    } else {
      out.rotation[j] = out.rotation[p] * local;
      out.translation[j] = out.rotation[p] * local_t + out.translation[p];
    }
  }
  return out;
}

template <typename T>
Eigen::Matrix<T, 3, 1> HandModel::skin_vertex(int v, const Skinning<T>& skinning,
                                              const Eigen::Matrix<T, kNumShape, 1>& shape) const {
  using Vec3T = Eigen::Matrix<T, 3, 1>;
  const Vec3T shaped = rig_.template_vertices.row(v).transpose().template cast<T>() +
                       rig_.shape_basis.block<3, kNumShape>(3 * v, 0).template cast<T>() * shape;
  // Displacement form keeps the rest pose bit-exact.
  Vec3T displacement = Vec3T::Zero();
  for (const auto& [j, w] : vertex_influences_[v]) {
    displacement += T(w) * ((skinning.rotation[j] - Eigen::Matrix<T, 3, 3>::Identity()) * shaped +
                            skinning.translation[j]);
  }
  return shaped + displacement;
}

template <typename T>
Eigen::Matrix<T, kNumJoints, 3> HandModel::joints_from_support(
    const Skinning<T>& skinning, const Eigen::Matrix<T, kNumShape, 1>& shape) const {
  Eigen::Matrix<T, kNumJoints, 3> joints;
  for (int j = 0; j < kNumJoints; ++j) {
    Eigen::Matrix<T, 3, 1> acc = Eigen::Matrix<T, 3, 1>::Zero();
    for (const auto& [v, w] : regressor_rows_[j]) acc += T(w) * skin_vertex<T>(v, skinning, shape);
    joints.row(j) = acc.transpose();
  }
  return joints;
}

Mesh HandModel::skin_mesh(const HandParams& params) const {
  const Skinning<double> skinning = pose_skeleton<double>(params.pose6d, params.shape);
  Mesh mesh(vertex_count(), 3);
  for (int v = 0; v < vertex_count(); ++v) mesh.row(v) = skin_vertex<double>(v, skinning, params.shape).transpose();
  return mesh;
}

Joints3 HandModel::regress_joints(const Mesh& mesh) const {
  Joints3 joints;
  for (int j = 0; j < kNumJoints; ++j) {
    Vec3 acc = Vec3::Zero();
    for (const auto& [v, w] : regressor_rows_[j]) acc += w * mesh.row(v).transpose();
    joints.row(j) = acc.transpose();
  }
  return joints;
}

Joints3 HandModel::posed_joints(const HandParams& params) const {
  const Skinning<double> skinning = pose_skeleton<double>(params.pose6d, params.shape);
  return joints_from_support<double>(skinning, params.shape);
}

JointJacobian HandModel::joint_jacobian(const HandParams& params) const {
  using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 1, 1>>;
  JointJacobian jac;
  const Eigen::Matrix<double, kPoseShapeDims, 1> x = params.flatten().head<kPoseShapeDims>();
  for (int col = 0; col < kPoseShapeDims; ++col) {
    Eigen::Matrix<Dual, kNumParts, 6, Eigen::RowMajor> pose;
    Eigen::Matrix<Dual, kNumShape, 1> shape;
    for (int i = 0; i < kPoseShapeDims; ++i) {
      Dual d(x(i), Eigen::Matrix<double, 1, 1>::Constant(i == col ? 1.0 : 0.0));
      if (i < kPoseDims) {
        pose(i / 6, i % 6) = d;
      } else {
        shape(i - kPoseDims) = d;
      }
    }
    const Skinning<Dual> skinning = pose_skeleton<Dual>(pose, shape);
    const Eigen::Matrix<Dual, kNumJoints, 3> joints = joints_from_support<Dual>(skinning, shape);
    for (int j = 0; j < kNumJoints; ++j) {
      for (int a = 0; a < 3; ++a) jac(3 * j + a, col) = joints(j, a).derivatives()(0);
    }
  }
  return jac;
}

HandModelPair HandModelPair::toy(std::uint64_t seed) { return from_right(make_toy_rig(seed)); }

HandModelPair HandModelPair::from_right(const HandRig& right) {
  return HandModelPair{HandModel(mirror_rig(right)), HandModel(right)};
}

BoneLengths bone_lengths(const Joints3& joints, const std::array<BoneEdge, kNumBones>& edges) {
  BoneLengths out;
  for (int e = 0; e < kNumBones; ++e) {
    out(e) = (joints.row(edges[e].second) - joints.row(edges[e].first)).norm();
  }
  return out;
}

}  // namespace acr
