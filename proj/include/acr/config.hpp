#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "acr/aggregation.hpp"
#include "acr/fitting.hpp"
#include "acr/hand_model.hpp"
#include "acr/synth.hpp"

namespace acr {

// Tunables read from a JSON file. Every section and key is optional:
//   scene        two_hand_prob, interaction_prob, truncation_prob,
//                occlusion_prob, max_joint_angle_deg, shape_range,
//                min_scale, max_scale, map_size, max_attempts
//   interaction  alpha, gamma, lambda_clamp
//   kernel       scale, min, max
//   loss_weights j3d, paj3d, pj2d, bone, pose, shape, center, part
//   fit          max_iters, step, max_halvings, fd_step, tolerance,
//                loss_floor, damping, freeze_alignment, jobs, terms
//   rig          seed (toy rig) or path (rig JSON, right hand)
// Unknown keys are rejected.
struct AppConfig {
  SynthConfig synth;  // also carries the interaction and kernel settings
  FitConfig fit;
  std::uint64_t rig_seed = 0;
  std::optional<std::filesystem::path> rig_path;

  const InteractionConfig& interaction() const { return synth.interaction; }
  void validate() const;
};

AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

// Accepts either a full config file (its "interaction" section is used) or a
// bare interaction object.
InteractionConfig interaction_from_json(const nlohmann::json& j);
InteractionConfig load_interaction_config(const std::filesystem::path& path);

HandModelPair make_models(const AppConfig& cfg);

nlohmann::json parse_json_file(const std::filesystem::path& path);

}  // namespace acr
