#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Core>
#include <json.hpp>

#include "acr/aggregation.hpp"
#include "acr/attention_maps.hpp"
#include "acr/feature_map.hpp"
#include "acr/hand_model.hpp"
#include "acr/types.hpp"

namespace acr {

// Axis-aligned rectangle in map pixels, half-open: x0 <= x < x1, y0 <= y < y1.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(const Vec2& p) const { return p.x() >= x0 && p.x() < x1 && p.y() >= y0 && p.y() < y1; }
  bool operator==(const Rect&) const = default;

  static Rect full_map(int size = kMapSize) { return {0.0, 0.0, double(size), double(size)}; }
};

struct SynthConfig {
  double two_hand_prob = 0.5;
  double interaction_prob = 0.5;
  double truncation_prob = 0.2;
  double occlusion_prob = 0.2;

  double max_joint_angle = 0.7853981633974483;  // 45 degrees
  double shape_range = 2.0;
  double min_scale = 100.0;  // map pixels per meter
  double max_scale = 180.0;

  InteractionConfig interaction;
  KernelConfig kernel;
  int map_size = kMapSize;
  int max_attempts = 1000;

  void validate() const;
};

// Everything needed to rebuild a scene; this is what gets serialized.
struct SceneSpec {
  std::uint64_t seed = 0;
  std::array<std::optional<HandParams>, 2> hands;  // indexed by Handedness
  Rect crop = Rect::full_map();
  std::optional<Rect> occluder;

  const std::optional<HandParams>& operator[](Handedness h) const { return hands[index_of(h)]; }
  std::optional<HandParams>& operator[](Handedness h) { return hands[index_of(h)]; }
  bool operator==(const SceneSpec&) const = default;
};

struct SceneHand {
  HandParams params;
  Mesh mesh;
  Joints3 joints3d;
  Joints2 joints2d;
  std::array<bool, kNumJoints> visible{};
  std::optional<Vec2> center;      // mean of the visible MCP joints
  std::optional<Vec2> map_center;  // center after repulsion, as rendered
  double kernel = 0.0;
  BoneLengths bones;
};

struct Scene {
  SceneSpec spec;
  std::array<std::optional<SceneHand>, 2> hands;
  FeatureMap center_map;       // 2 x H x W
  Eigen::MatrixXi part_labels;  // H x W

  const std::optional<SceneHand>& operator[](Handedness h) const { return hands[index_of(h)]; }
  int hand_count() const { return int(hands[0].has_value()) + int(hands[1].has_value()); }
};

// A joint is visible when its projection lies inside the crop and outside
// the occluder.
std::array<bool, kNumJoints> joint_visibility(const Joints2& joints2d, const Rect& crop,
                                              const std::optional<Rect>& occluder);

// Recomputes every derived quantity of a scene from its spec.
Scene derive_scene(const SceneSpec& spec, const HandModelPair& models, const SynthConfig& cfg = {});

// Deterministic in (seed, cfg, models). Throws Error when no valid scene is
// found within cfg.max_attempts draws.
Scene sample_scene(std::uint64_t seed, const SynthConfig& cfg, const HandModelPair& models);

// Broadcast-constant parameter and cross maps carrying the encoded 109-vector
// of each present hand, the scene's center map and one-hot part labels.
// noise_sigma > 0 adds per-pixel Gaussian noise to the parameter map.
MapStack oracle_maps(const Scene& scene, double noise_sigma = 0.0, std::uint64_t noise_seed = 0);

// Gaussian noise on pose and shape; s scaled by (1 + noise * n), t shifted by
// noise * n.
HandParams perturb_params(const HandParams& params, double noise_scale, std::uint64_t seed);

nlohmann::json params_to_json(const HandParams& params);
HandParams params_from_json(const nlohmann::json& j, Handedness side);

nlohmann::json scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const nlohmann::json& j);

void save_scene(const SceneSpec& spec, const std::filesystem::path& path);
SceneSpec load_scene(const std::filesystem::path& path);

}  // namespace acr
