#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "acr/types.hpp"

namespace acr {

using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using BoneEdge = std::pair<int, int>;

// Static data of an articulated hand mesh model.
//
// Output joint layout: rows 0..15 of `joint_regressor` are the kinematic
// joints (wrist, then index/middle/pinky/ring/thumb chains of three), rows
// 16..20 the fingertips. The kinematic rows are what the skeleton follows
// when the shape changes.
struct HandRig {
  Mesh template_vertices;          // V x 3, meters
  Faces faces;                     // F x 3
  Eigen::MatrixXd shape_basis;     // 3V x 10, row 3*v + axis
  Eigen::MatrixXd skin_weights;    // V x 16
  Eigen::MatrixXd joint_regressor; // 21 x V
  std::array<int, kNumParts> parent{};
  Eigen::Matrix<double, kNumParts, 3, Eigen::RowMajor> rest_joints;
  std::array<int, 5> mcp_indices{};
  std::array<BoneEdge, kNumBones> bone_edges{};
  std::vector<int> vertex_part;    // dominant skinning part of each vertex

  int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.rows()); }
};

// Throws InvalidArgument naming the first violated invariant.
void validate_rig(const HandRig& rig);

// Deterministic procedural right hand: 778 vertices in capsule-like clusters
// (one per part), 16 parts, 21 joints, 20 bones. The seed jitters bone
// lengths, radii and the free shape-basis directions.
HandRig make_toy_rig(std::uint64_t seed = 0);

// Reflects a rig through the x = 0 plane (right <-> left).
HandRig mirror_rig(const HandRig& rig);

void save_rig(const HandRig& rig, const std::filesystem::path& path);
HandRig load_rig(const std::filesystem::path& path);

}  // namespace acr
