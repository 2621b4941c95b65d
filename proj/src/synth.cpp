#include "acr/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "acr/errors.hpp"
#include "acr/io.hpp"
#include "acr/rotation.hpp"

namespace acr {

using nlohmann::json;

void SynthConfig::validate() const {
  for (double p : {two_hand_prob, interaction_prob, truncation_prob, occlusion_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("synth probabilities must lie in [0, 1]");
  }
  if (!(max_joint_angle >= 0.0 && max_joint_angle <= std::numbers::pi)) {
    throw InvalidArgument("max_joint_angle must lie in [0, pi]");
  }
  if (!(shape_range >= 0.0)) throw InvalidArgument("shape_range must be nonnegative");
  if (!(min_scale > 0.0 && max_scale >= min_scale)) throw InvalidArgument("scale range must be positive and ordered");
  if (map_size < 8) throw InvalidArgument("map_size must be at least 8");
  if (max_attempts < 1) throw InvalidArgument("max_attempts must be positive");
  interaction.validate();
}

std::array<bool, kNumJoints> joint_visibility(const Joints2& joints2d, const Rect& crop,
                                              const std::optional<Rect>& occluder) {
  std::array<bool, kNumJoints> visible{};
  for (int j = 0; j < kNumJoints; ++j) {
    const Vec2 p = joints2d.row(j).transpose();
    visible[j] = crop.contains(p) && !(occluder && occluder->contains(p));
  }
  return visible;
}

namespace {

Rect joint_bbox(const Joints2& joints2d) {
  const Eigen::RowVector2d lo = joints2d.colwise().minCoeff();
  const Eigen::RowVector2d hi = joints2d.colwise().maxCoeff();
  return {lo.x(), lo.y(), hi.x(), hi.y()};
}

double kernel_of(const Joints2& joints2d, const KernelConfig& cfg) {
  const Rect box = joint_bbox(joints2d);
  return kernel_from_bbox(box.x1 - box.x0, box.y1 - box.y0, cfg);
}

}  // namespace

Scene derive_scene(const SceneSpec& spec, const HandModelPair& models, const SynthConfig& cfg) {
  const int size = cfg.map_size;
  Scene scene;
  scene.spec = spec;
  for (Handedness side : kBothHands) {
    if (!spec[side]) continue;
    const HandModel& model = models[side];
    SceneHand hand;
    hand.params = *spec[side];
    hand.params.handedness = side;
    hand.mesh = model.skin_mesh(hand.params);
    hand.joints3d = model.regress_joints(hand.mesh);
    hand.joints2d = project_weak_perspective<kNumJoints>(hand.joints3d, hand.params.camera);
    hand.visible = joint_visibility(hand.joints2d, spec.crop, spec.occluder);
    hand.center = compute_center(hand.joints2d, model.rig().mcp_indices, hand.visible);
    hand.map_center = hand.center;
    hand.kernel = kernel_of(hand.joints2d, cfg.kernel);
    hand.bones = bone_lengths(hand.joints3d, model.rig().bone_edges);
    scene.hands[index_of(side)] = std::move(hand);
  }

  auto& left = scene.hands[0];
  auto& right = scene.hands[1];
  if (left && right && left->center && right->center) {
    const CenterPair moved =
        collision_aware_repulsion(*left->center, *right->center, left->kernel, right->kernel, cfg.interaction.alpha);
    left->map_center = moved.left;
    right->map_center = moved.right;
  }

  scene.center_map = FeatureMap(kCenterMapChannels, size, size);
  std::vector<SplatSource> sources;
  for (Handedness side : kBothHands) {
    const auto& hand = scene.hands[index_of(side)];
    if (!hand) continue;
    scene.center_map.channel(index_of(side)) = render_center_map({hand->map_center, hand->kernel}, size, size).data;
    sources.push_back({&hand->mesh, &models[side].rig().vertex_part, hand->params.camera, side});
  }

  scene.part_labels = render_part_segmentation(sources, size, size).labels;
  for (int h = 0; h < size; ++h) {
    for (int w = 0; w < size; ++w) {
      const Vec2 p(w, h);
      if (!spec.crop.contains(p) || (spec.occluder && spec.occluder->contains(p))) scene.part_labels(h, w) = 0;
    }
  }
  return scene;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool bernoulli(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

Vec3 random_axis(Rng& rng) {
  std::normal_distribution<double> g;
  Vec3 axis;
  do {
    axis = Vec3(g(rng), g(rng), g(rng));
  } while (axis.norm() < 1e-6);
  return axis.normalized();
}

HandParams sample_hand(Rng& rng, Handedness side, const SynthConfig& cfg) {
  HandParams p;
  p.handedness = side;
  for (int j = 0; j < kNumParts; ++j) {
    const Vec3 axis = random_axis(rng);
    const double angle = uniform(rng, 0.0, cfg.max_joint_angle);
    p.pose6d.row(j) = matrix_to_rot6d(axis_angle_to_matrix(axis, angle)).transpose();
  }
  for (int k = 0; k < kNumShape; ++k) p.shape(k) = uniform(rng, -cfg.shape_range, cfg.shape_range);
  p.camera.s = uniform(rng, cfg.min_scale, cfg.max_scale);
  return p;
}

// Interaction test with a margin that survives rounding of the centers to
// map pixels.
constexpr double kPlacementMargin = 2.0;
constexpr double kCheckMargin = 1.5;

bool scene_is_valid(const Scene& scene, bool interacting, const SynthConfig& cfg) {
  const int size = cfg.map_size;
  for (const auto& hand : scene.hands) {
    if (!hand) continue;
    if (!hand->center || !hand->map_center) return false;
    const Vec2 c = *hand->map_center;
    if (c.x() < 1.0 || c.y() < 1.0 || c.x() > size - 2.0 || c.y() > size - 2.0) return false;
  }
  if (scene.hand_count() < 2) return true;
  const SceneHand& l = *scene.hands[0];
  const SceneHand& r = *scene.hands[1];
  const double d = (*l.center - *r.center).norm();
  const double field = interaction_field(l.kernel, r.kernel, cfg.interaction.gamma);
  return interacting ? (d >= kCheckMargin && d <= field - kCheckMargin) : d >= field + kCheckMargin;
}

}  // namespace

Scene sample_scene(std::uint64_t seed, const SynthConfig& cfg, const HandModelPair& models) {
  cfg.validate();
  Rng rng(seed);
  const double size = cfg.map_size;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    SceneSpec spec;
    spec.seed = seed;
    spec.crop = Rect::full_map(cfg.map_size);

    const bool two = bernoulli(rng, cfg.two_hand_prob);
    const bool single_right = bernoulli(rng, 0.5);
    const bool interacting = two && bernoulli(rng, cfg.interaction_prob);
    const bool truncated = bernoulli(rng, cfg.truncation_prob);
    const bool occluded = bernoulli(rng, cfg.occlusion_prob);

    std::vector<Handedness> sides;
    if (two) {
      sides = {Handedness::Left, Handedness::Right};
    } else {
      sides = {single_right ? Handedness::Right : Handedness::Left};
    }

    // Pose, shape and scale first; the kernel only depends on these.
    std::array<Joints2, 2> offsets;  // projected joints with zero translation
    std::array<Vec2, 2> mcp_mean;
    std::array<double, 2> kernels{};
    for (Handedness side : sides) {
      HandParams p = sample_hand(rng, side, cfg);
      const int i = index_of(side);
      offsets[i] = project_weak_perspective<kNumJoints>(models[side].posed_joints(p), p.camera);
      mcp_mean[i] = Vec2::Zero();
      for (int j : models[side].rig().mcp_indices) mcp_mean[i] += offsets[i].row(j).transpose();
      mcp_mean[i] /= 5.0;
      kernels[i] = kernel_of(offsets[i], cfg.kernel);
      spec[side] = p;
    }

    std::array<Vec2, 2> targets;
    if (two) {
      const double field = interaction_field(kernels[0], kernels[1], cfg.interaction.gamma);
      const double d = interacting ? uniform(rng, kPlacementMargin, std::max(kPlacementMargin, field - kPlacementMargin))
                                   : uniform(rng, field + kPlacementMargin, field + kPlacementMargin + 16.0);
      const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const Vec2 dir(std::cos(theta), std::sin(theta));
      const Vec2 mid(uniform(rng, 0.25 * size, 0.75 * size), uniform(rng, 0.25 * size, 0.75 * size));
      targets[0] = mid - 0.5 * d * dir;
      targets[1] = mid + 0.5 * d * dir;
    } else {
      const int i = index_of(sides[0]);
      targets[i] = Vec2(uniform(rng, 0.2 * size, 0.8 * size), uniform(rng, 0.2 * size, 0.8 * size));
    }
    for (Handedness side : sides) {
      const int i = index_of(side);
      const Vec2 t = targets[i] - mcp_mean[i];
      spec[side]->camera.tx = t.x();
      spec[side]->camera.ty = t.y();
      offsets[i].rowwise() += t.transpose();
    }

    if (truncated) {
      // Cut through one hand's joint bounding box from a random side.
      const Handedness side = sides[std::uniform_int_distribution<std::size_t>(0, sides.size() - 1)(rng)];
      const Rect box = joint_bbox(offsets[index_of(side)]);
      const int edge = std::uniform_int_distribution<int>(0, 3)(rng);
      const double frac = uniform(rng, 0.35, 0.65);
      Rect& crop = spec.crop;
      switch (edge) {
        case 0: crop.x0 = std::max(crop.x0, box.x0 + frac * (box.x1 - box.x0)); break;
        case 1: crop.x1 = std::min(crop.x1, box.x0 + frac * (box.x1 - box.x0)); break;
        case 2: crop.y0 = std::max(crop.y0, box.y0 + frac * (box.y1 - box.y0)); break;
        default: crop.y1 = std::min(crop.y1, box.y0 + frac * (box.y1 - box.y0)); break;
      }
    }
    if (occluded) {
      const Handedness side = sides[std::uniform_int_distribution<std::size_t>(0, sides.size() - 1)(rng)];
      const int joint = std::uniform_int_distribution<int>(0, kNumJoints - 1)(rng);
      const Vec2 at = offsets[index_of(side)].row(joint).transpose();
      const double half_w = 0.5 * uniform(rng, 5.0, 12.0);
      const double half_h = 0.5 * uniform(rng, 5.0, 12.0);
      spec.occluder = Rect{at.x() - half_w, at.y() - half_h, at.x() + half_w, at.y() + half_h};
    }

    Scene scene = derive_scene(spec, models, cfg);
    if (scene_is_valid(scene, interacting, cfg)) return scene;
  }
  throw Error("no valid scene found for seed " + std::to_string(seed));
}

MapStack oracle_maps(const Scene& scene, double noise_sigma, std::uint64_t noise_seed) {
  const int size = scene.center_map.height;
  MapStack maps = MapStack::zeros(size, size);
  for (Handedness side : kBothHands) {
    const auto& hand = scene[side];
    if (!hand) continue;
    const ParamVector v = encode_param_vector(hand->params);
    const int first = index_of(side) * kParamDims;
    for (int c = 0; c < kParamDims; ++c) {
      maps.param_map.channel(first + c).setConstant(v(c));
      maps.cross_map.channel(first + c).setConstant(v(c));
    }
  }
  if (noise_sigma > 0.0) {
    Rng rng(noise_seed);
    std::normal_distribution<double> g(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < maps.param_map.data.size(); ++i) maps.param_map.data.data()[i] += g(rng);
  }
  maps.center_map = scene.center_map;
  maps.part_map = one_hot_labels(scene.part_labels);
  return maps;
}

HandParams perturb_params(const HandParams& params, double noise_scale, std::uint64_t seed) {
  if (!(noise_scale >= 0.0)) throw InvalidArgument("noise scale must be nonnegative");
  HandParams out = params;
  if (noise_scale == 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < out.pose6d.size(); ++i) out.pose6d.data()[i] += noise_scale * g(rng);
  for (Eigen::Index i = 0; i < out.shape.size(); ++i) out.shape(i) += noise_scale * g(rng);
  out.camera.s *= 1.0 + noise_scale * g(rng);
  out.camera.tx += noise_scale * g(rng);
  out.camera.ty += noise_scale * g(rng);
  return out;
}

json params_to_json(const HandParams& params) {
  return {{"pose6d", std::vector<double>(params.pose6d.data(), params.pose6d.data() + kPoseDims)},
          {"shape", std::vector<double>(params.shape.data(), params.shape.data() + kNumShape)},
          {"camera", {params.camera.s, params.camera.tx, params.camera.ty}}};
}

namespace {

std::vector<double> numbers(const json& j, const char* key, std::size_t count) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != count) {
    throw FormatError(std::string("field '") + key + "' must be an array of " + std::to_string(count) + " numbers");
  }
  std::vector<double> out;
  for (const json& v : j.at(key)) {
    if (!v.is_number()) throw FormatError(std::string("field '") + key + "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json rect_to_json(const Rect& r) { return {r.x0, r.y0, r.x1, r.y1}; }

Rect rect_from_json(const json& j, const char* key) {
  const auto v = numbers(j, key, 4);
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

HandParams params_from_json(const json& j, Handedness side) {
  if (!j.is_object()) throw FormatError("hand parameters must be an object");
  HandParams p;
  p.handedness = side;
  const auto pose = numbers(j, "pose6d", kPoseDims);
  const auto shape = numbers(j, "shape", kNumShape);
  const auto camera = numbers(j, "camera", 3);
  p.pose6d = Eigen::Map<const Pose6d>(pose.data());
  p.shape = Eigen::Map<const ShapeCoeffs>(shape.data());
  p.camera = {camera[0], camera[1], camera[2]};
  return p;
}

json scene_to_json(const SceneSpec& spec) {
  json j = {{"seed", spec.seed}};
  for (Handedness side : kBothHands) {
    if (spec[side]) j[std::string(name_of(side))] = params_to_json(*spec[side]);
  }
  if (!(spec.crop == Rect::full_map())) j["crop"] = rect_to_json(spec.crop);
  if (spec.occluder) j["occluder"] = rect_to_json(*spec.occluder);
  return j;
}

SceneSpec scene_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("scene must be a JSON object");
  SceneSpec spec;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw FormatError("scene seed must be an integer");
    spec.seed = j.at("seed").get<std::uint64_t>();
  }
  for (Handedness side : kBothHands) {
    const std::string key(name_of(side));
    if (j.contains(key) && !j.at(key).is_null()) spec[side] = params_from_json(j.at(key), side);
  }
  if (j.contains("crop")) spec.crop = rect_from_json(j, "crop");
  if (j.contains("occluder")) spec.occluder = rect_from_json(j, "occluder");
  return spec;
}

void save_scene(const SceneSpec& spec, const std::filesystem::path& path) {
  write_file_atomic(path, scene_to_json(spec).dump(2) + "\n");
}

SceneSpec load_scene(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError("invalid scene JSON in '" + path.string() + "': " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace acr
