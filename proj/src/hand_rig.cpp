#include "acr/hand_rig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "acr/errors.hpp"

namespace acr {
namespace {

constexpr int kRingSegments = 8;
constexpr int kFingerRings = 6;
constexpr int kPalmRings = 7;
constexpr int kPalmVertices = kPalmRings * kRingSegments + 2;
constexpr int kFingerVertices = kFingerRings * kRingSegments;
constexpr int kToyVertexCount = kPalmVertices + 15 * kFingerVertices;  // 778

// Kinematic chains in joint-index order: index, middle, pinky, ring, thumb.
constexpr std::array<std::array<int, 3>, 5> kChains = {{
    {1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {10, 11, 12}, {13, 14, 15}}};
constexpr std::array<int, kNumParts> kParents = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 0, 10, 11, 0, 13, 14};

struct FingerLayout {
  Vec3 base;
  Vec3 direction;
  std::array<double, 3> lengths;
  double radius;
};

Vec3 perpendicular(const Vec3& axis) {
  Vec3 u = axis.cross(Vec3::UnitZ());
  if (u.norm() < 1e-6) u = axis.cross(Vec3::UnitX());
  return u.normalized();
}

void check(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("invalid hand rig: " + what);
}

}  // namespace

void validate_rig(const HandRig& rig) {
  const int v = rig.vertex_count();
  check(v > 0, "no vertices");
  check(rig.shape_basis.rows() == 3 * v && rig.shape_basis.cols() == kNumShape,
        "shape_basis must be 3V x 10");
  check(rig.skin_weights.rows() == v && rig.skin_weights.cols() == kNumParts,
        "skin_weights must be V x 16");
  check(rig.joint_regressor.rows() == kNumJoints && rig.joint_regressor.cols() == v,
        "joint_regressor must be 21 x V");
  check(static_cast<int>(rig.vertex_part.size()) == v, "vertex_part must have V entries");
  for (int i = 0; i < v; ++i) {
    check((rig.skin_weights.row(i).array() >= 0.0).all(), "negative skin weight");
    check(std::abs(rig.skin_weights.row(i).sum() - 1.0) <= 1e-6, "skin weights must sum to 1");
    check(rig.vertex_part[i] >= 0 && rig.vertex_part[i] < kNumParts, "vertex part out of range");
  }
  for (int j = 0; j < kNumJoints; ++j) {
    check(std::abs(rig.joint_regressor.row(j).sum() - 1.0) <= 1e-6,
          "joint regressor rows must sum to 1");
  }
  check(rig.parent[0] < 0, "joint 0 must be the root");
  for (int j = 1; j < kNumParts; ++j) {
    check(rig.parent[j] >= 0 && rig.parent[j] < j, "parent indices must satisfy parent[i] < i");
  }
  for (int m : rig.mcp_indices) check(m >= 0 && m < kNumJoints, "mcp index out of range");
  for (const auto& [a, b] : rig.bone_edges) {
    check(a >= 0 && a < kNumJoints && b >= 0 && b < kNumJoints && a != b, "bad bone edge");
  }
  check((rig.faces.array() >= 0).all() && (rig.faces.array() < v).all(),
        "face references a missing vertex");
  check(rig.template_vertices.allFinite() && rig.shape_basis.allFinite(), "non-finite geometry");
}

HandRig make_toy_rig(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double palm_length = 0.09 * (1.0 + 0.05 * jitter(rng));
  const double palm_half_width = 0.034 * (1.0 + 0.05 * jitter(rng));
  const double palm_half_depth = 0.012;

  const std::array<Vec3, 5> bases = {Vec3(0.024, palm_length, 0.0), Vec3(0.004, palm_length * 1.02, 0.0),
                                     Vec3(-0.032, palm_length * 0.88, 0.0),
                                     Vec3(-0.014, palm_length * 0.97, 0.0), Vec3(0.028, 0.025, -0.008)};
  const std::array<Vec3, 5> directions = {Vec3(0.12, 1.0, 0.0), Vec3(0.0, 1.0, 0.0), Vec3(-0.22, 1.0, 0.0),
                                          Vec3(-0.1, 1.0, 0.0), Vec3(0.75, 0.7, -0.25)};
  const std::array<std::array<double, 3>, 5> lengths = {{{0.040, 0.025, 0.020},
                                                         {0.045, 0.028, 0.022},
                                                         {0.032, 0.020, 0.018},
                                                         {0.042, 0.026, 0.021},
                                                         {0.035, 0.030, 0.025}}};
  const std::array<double, 5> radii = {0.0085, 0.009, 0.0075, 0.0085, 0.0105};

  std::array<FingerLayout, 5> fingers;
  for (int f = 0; f < 5; ++f) {
    fingers[f].base = bases[f];
    fingers[f].direction = directions[f].normalized();
    for (int s = 0; s < 3; ++s) fingers[f].lengths[s] = lengths[f][s] * (1.0 + 0.08 * jitter(rng));
    fingers[f].radius = radii[f] * (1.0 + 0.1 * jitter(rng));
  }

  // Joint positions (16 kinematic + 5 tips).
  std::array<Vec3, kNumJoints> joints;
  joints[0] = Vec3::Zero();
  for (int f = 0; f < 5; ++f) {
    Vec3 p = fingers[f].base;
    for (int s = 0; s < 3; ++s) {
      joints[kChains[f][s]] = p;
      p += fingers[f].direction * fingers[f].lengths[s];
    }
    joints[kNumParts + f] = p;
  }

  HandRig rig;
  rig.parent = kParents;
  rig.template_vertices.resize(kToyVertexCount, 3);
  rig.skin_weights = Eigen::MatrixXd::Zero(kToyVertexCount, kNumParts);
  rig.joint_regressor = Eigen::MatrixXd::Zero(kNumJoints, kToyVertexCount);
  rig.vertex_part.assign(kToyVertexCount, 0);
  std::vector<Vec3> radial(kToyVertexCount, Vec3::Zero());
  std::vector<Eigen::Vector3i> faces;

  auto ring_faces = [&](int first_ring, int rings) {
    for (int i = 0; i + 1 < rings; ++i) {
      for (int k = 0; k < kRingSegments; ++k) {
        const int a = first_ring + i * kRingSegments + k;
        const int b = first_ring + i * kRingSegments + (k + 1) % kRingSegments;
        const int c = a + kRingSegments;
        const int d = b + kRingSegments;
        faces.emplace_back(a, c, d);
        faces.emplace_back(a, d, b);
      }
    }
  };

  // Palm: wrist cap, elliptic rings along +y, knuckle cap.
  int next = 0;
  const int palm_first_ring = 1;
  rig.template_vertices.row(next) = Vec3::Zero().transpose();
  rig.skin_weights(next, 0) = 1.0;
  ++next;
  for (int i = 0; i < kPalmRings; ++i) {
    const double t = static_cast<double>(i) / (kPalmRings - 1);
    const double half_width = palm_half_width * (0.8 + 0.2 * t);
    for (int k = 0; k < kRingSegments; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / kRingSegments;
      const Vec3 n(std::cos(phi), 0.0, std::sin(phi));
      rig.template_vertices.row(next) =
          Vec3(half_width * n.x(), t * palm_length, palm_half_depth * n.z()).transpose();
      radial[next] = n;
      rig.skin_weights(next, 0) = 1.0;
      ++next;
    }
  }
  const int palm_top_cap = next;
  rig.template_vertices.row(next) = Vec3(0.0, palm_length, 0.0).transpose();
  rig.skin_weights(next, 0) = 1.0;
  ++next;
  ring_faces(palm_first_ring, kPalmRings);
  for (int k = 0; k < kRingSegments; ++k) {
    const int k1 = (k + 1) % kRingSegments;
    faces.emplace_back(0, palm_first_ring + k1, palm_first_ring + k);
    const int top = palm_first_ring + (kPalmRings - 1) * kRingSegments;
    faces.emplace_back(palm_top_cap, top + k, top + k1);
  }
  // Wrist: cap centre plus the first palm ring.
  rig.joint_regressor(0, 0) = 1.0 / (kRingSegments + 1);
  for (int k = 0; k < kRingSegments; ++k) {
    rig.joint_regressor(0, palm_first_ring + k) = 1.0 / (kRingSegments + 1);
  }

  // Fingers: one tapered tube per bone, owned by the bone's proximal joint.
  for (int f = 0; f < 5; ++f) {
    for (int s = 0; s < 3; ++s) {
      const int part = kChains[f][s];
      const Vec3 start = joints[part];
      const Vec3 end = s < 2 ? joints[kChains[f][s + 1]] : joints[kNumParts + f];
      const Vec3 axis = (end - start).normalized();
      const Vec3 u = perpendicular(axis);
      const Vec3 w = axis.cross(u);
      const double radius = fingers[f].radius * (1.0 - 0.12 * s);
      const int first = next;
      for (int i = 0; i < kFingerRings; ++i) {
        const double t = static_cast<double>(i) / (kFingerRings - 1);
        const double parent_weight = std::max(0.0, 0.5 - t);
        for (int k = 0; k < kRingSegments; ++k) {
          const double phi = 2.0 * std::numbers::pi * k / kRingSegments;
          const Vec3 n = std::cos(phi) * u + std::sin(phi) * w;
          rig.template_vertices.row(next) =
              (start + t * (end - start) + radius * (1.0 - 0.15 * t) * n).transpose();
          radial[next] = n;
          rig.skin_weights(next, part) = 1.0 - parent_weight;
          rig.skin_weights(next, kParents[part]) += parent_weight;
          rig.vertex_part[next] = part;
          ++next;
        }
      }
      ring_faces(first, kFingerRings);
      const int last = first + (kFingerRings - 1) * kRingSegments;
      for (int k = 1; k + 1 < kRingSegments; ++k) {
        faces.emplace_back(first, first + k + 1, first + k);
        faces.emplace_back(last, last + k, last + k + 1);
      }
      for (int k = 0; k < kRingSegments; ++k) {
        rig.joint_regressor(part, first + k) = 1.0 / kRingSegments;
        if (s == 2) rig.joint_regressor(kNumParts + f, last + k) = 1.0 / kRingSegments;
      }
    }
  }

  rig.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) rig.faces.row(static_cast<Eigen::Index>(i)) = faces[i].transpose();

  // Shape basis: global scale, elongation, thickness, width, then six seeded
  // directions that move whole kinematic chains and inflate parts.
  rig.shape_basis = Eigen::MatrixXd::Zero(3 * kToyVertexCount, kNumShape);
  std::array<std::array<Vec3, kNumParts>, 6> part_shift;
  std::array<std::array<double, kNumParts>, 6> part_inflate;
  for (int k = 0; k < 6; ++k) {
    for (int p = 0; p < kNumParts; ++p) {
      part_shift[k][p] = 0.0012 * Vec3(gauss(rng), gauss(rng), gauss(rng));
      part_inflate[k][p] = 0.0008 * gauss(rng);
    }
  }
  for (int v = 0; v < kToyVertexCount; ++v) {
    const Vec3 x = rig.template_vertices.row(v).transpose();
    auto set = [&](int k, const Vec3& d) { rig.shape_basis.block<3, 1>(3 * v, k) = d; };
    set(0, 0.03 * x);
    set(1, Vec3(0.0, 0.03 * x.y(), 0.0));
    set(2, 0.0012 * radial[v]);
    set(3, Vec3(0.03 * x.x(), 0.0, 0.0));
    for (int k = 0; k < 6; ++k) {
      Vec3 d = part_inflate[k][rig.vertex_part[v]] * radial[v];
      for (int p = rig.vertex_part[v]; p >= 0; p = kParents[p]) d += part_shift[k][p];
      set(4 + k, d);
    }
  }

  rig.rest_joints = (rig.joint_regressor.topRows(kNumParts) * rig.template_vertices);
  rig.mcp_indices = {1, 4, 7, 10, 13};
  int e = 0;
  for (int j = 1; j < kNumParts; ++j) rig.bone_edges[e++] = {kParents[j], j};
  for (int f = 0; f < 5; ++f) rig.bone_edges[e++] = {kChains[f][2], kNumParts + f};

  validate_rig(rig);
  return rig;
}

HandRig mirror_rig(const HandRig& rig) {
  HandRig out = rig;
  out.template_vertices.col(0) *= -1.0;
  out.rest_joints.col(0) *= -1.0;
  for (Eigen::Index r = 0; r < out.shape_basis.rows(); r += 3) out.shape_basis.row(r) *= -1.0;
  out.faces.col(1).swap(out.faces.col(2));
  return out;
}

namespace {

using nlohmann::json;

template <typename Derived>
json rows_to_json(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_from_json(const json& rows, Eigen::Index cols,
                                                                     const std::string& what) {
  if (!rows.is_array()) throw FormatError("rig: " + what + " must be an array");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || static_cast<Eigen::Index>(rows[r].size()) != cols) {
      throw FormatError("rig: row of wrong width in " + what);
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][c].get<Scalar>();
  }
  return m;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> field_matrix(const json& j, const std::string& name,
                                                                 Eigen::Index cols) {
  if (!j.contains(name)) throw FormatError("rig: missing " + name);
  return matrix_from_json<Scalar>(j.at(name), cols, name);
}

}  // namespace

void save_rig(const HandRig& rig, const std::filesystem::path& path) {
  json j;
  j["format"] = "acr-rig";
  j["version"] = 1;
  j["template_vertices"] = rows_to_json(rig.template_vertices);
  j["faces"] = rows_to_json(rig.faces);
  json basis = json::array();
  for (int v = 0; v < rig.vertex_count(); ++v) {
    basis.push_back(rows_to_json(rig.shape_basis.block(3 * v, 0, 3, kNumShape)));
  }
  j["shape_basis"] = std::move(basis);
  j["skin_weights"] = rows_to_json(rig.skin_weights);
  j["joint_regressor"] = rows_to_json(rig.joint_regressor);
  j["parent"] = rig.parent;
  j["rest_joints"] = rows_to_json(rig.rest_joints);
  j["mcp_indices"] = rig.mcp_indices;
  json edges = json::array();
  for (const auto& [a, b] : rig.bone_edges) edges.push_back({a, b});
  j["bone_edges"] = std::move(edges);
  j["vertex_part"] = rig.vertex_part;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write rig file " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing rig file " + path.string());
}

HandRig load_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rig file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("rig: " + std::string(e.what()));
  }
  try {
    HandRig rig;
    rig.template_vertices = field_matrix<double>(j, "template_vertices", 3);
    rig.faces = field_matrix<int>(j, "faces", 3);
    const int v = rig.vertex_count();
    const json& basis = j.at("shape_basis");
    if (!basis.is_array() || static_cast<int>(basis.size()) != v) throw FormatError("rig: shape_basis must be V x 3 x 10");
    rig.shape_basis.resize(3 * v, kNumShape);
    for (int i = 0; i < v; ++i) {
      const json& slice = basis[static_cast<std::size_t>(i)];
      if (!slice.is_array() || slice.size() != 3) throw FormatError("rig: shape_basis must be V x 3 x 10");
      rig.shape_basis.block(3 * i, 0, 3, kNumShape) = matrix_from_json<double>(slice, kNumShape, "shape_basis");
    }
    rig.skin_weights = field_matrix<double>(j, "skin_weights", kNumParts);
    rig.joint_regressor = field_matrix<double>(j, "joint_regressor", v);
    rig.parent = j.at("parent").get<std::array<int, kNumParts>>();
    const Eigen::MatrixXd rest = field_matrix<double>(j, "rest_joints", 3);
    if (rest.rows() != kNumParts) throw FormatError("rig: rest_joints must be 16 x 3");
    rig.rest_joints = rest;
    rig.mcp_indices = j.at("mcp_indices").get<std::array<int, 5>>();
    const json& edges = j.at("bone_edges");
    if (!edges.is_array() || edges.size() != kNumBones) throw FormatError("rig: bone_edges must hold 20 pairs");
    for (int e = 0; e < kNumBones; ++e) {
      rig.bone_edges[e] = {edges[e].at(0).get<int>(), edges[e].at(1).get<int>()};
    }
    if (j.contains("vertex_part")) {
      rig.vertex_part = j.at("vertex_part").get<std::vector<int>>();
    } else {
      rig.vertex_part.resize(v);
      for (int i = 0; i < v; ++i) rig.skin_weights.row(i).maxCoeff(&rig.vertex_part[i]);
    }
    validate_rig(rig);
    return rig;
  } catch (const json::exception& e) {
    throw FormatError("rig: " + std::string(e.what()));
  }
}

}  // namespace acr
