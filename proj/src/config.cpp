#include "acr/config.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "acr/errors.hpp"
#include "acr/io.hpp"

namespace acr {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where, const std::set<std::string>& keys) {
  if (!j.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    if (!keys.contains(item.key())) throw InvalidArgument("config: unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config: bad value for '") + key + "'");
  }
}

void read_interaction(const json& j, InteractionConfig& cfg) {
  require_object(j, "interaction", {"alpha", "gamma", "lambda_clamp"});
  read(j, "alpha", cfg.alpha);
  read(j, "gamma", cfg.gamma);
  if (j.contains("lambda_clamp")) {
    if (j.at("lambda_clamp").is_null()) {
      cfg.lambda_clamp.reset();
    } else {
      double clamp = 0.0;
      read(j, "lambda_clamp", clamp);
      cfg.lambda_clamp = clamp;
    }
  }
}

}  // namespace

void AppConfig::validate() const {
  synth.validate();
  fit.validate();
}

AppConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "config", {"scene", "interaction", "kernel", "loss_weights", "fit", "rig"});
  AppConfig cfg;
  if (j.contains("scene")) {
    const json& s = j.at("scene");
    require_object(s, "scene",
                   {"two_hand_prob", "interaction_prob", "truncation_prob", "occlusion_prob", "max_joint_angle_deg",
                    "shape_range", "min_scale", "max_scale", "map_size", "max_attempts"});
    read(s, "two_hand_prob", cfg.synth.two_hand_prob);
    read(s, "interaction_prob", cfg.synth.interaction_prob);
    read(s, "truncation_prob", cfg.synth.truncation_prob);
    read(s, "occlusion_prob", cfg.synth.occlusion_prob);
    if (s.contains("max_joint_angle_deg")) {
      double deg = 0.0;
      read(s, "max_joint_angle_deg", deg);
      cfg.synth.max_joint_angle = deg * std::numbers::pi / 180.0;
    }
    read(s, "shape_range", cfg.synth.shape_range);
    read(s, "min_scale", cfg.synth.min_scale);
    read(s, "max_scale", cfg.synth.max_scale);
    read(s, "map_size", cfg.synth.map_size);
    read(s, "max_attempts", cfg.synth.max_attempts);
  }
  if (j.contains("interaction")) read_interaction(j.at("interaction"), cfg.synth.interaction);
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    require_object(k, "kernel", {"scale", "min", "max"});
    read(k, "scale", cfg.synth.kernel.scale);
    read(k, "min", cfg.synth.kernel.min_kernel);
    read(k, "max", cfg.synth.kernel.max_kernel);
  }
  if (j.contains("loss_weights")) {
    const json& w = j.at("loss_weights");
    require_object(w, "loss_weights", {"j3d", "paj3d", "pj2d", "bone", "pose", "shape", "center", "part"});
    LossWeights& lw = cfg.fit.weights;
    read(w, "j3d", lw.j3d);
    read(w, "paj3d", lw.paj3d);
    read(w, "pj2d", lw.pj2d);
    read(w, "bone", lw.bone);
    read(w, "pose", lw.pose);
    read(w, "shape", lw.shape);
    read(w, "center", lw.center);
    read(w, "part", lw.part);
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    require_object(f, "fit",
                   {"max_iters", "step", "max_halvings", "fd_step", "tolerance", "loss_floor", "damping",
                    "freeze_alignment", "jobs", "terms"});
    read(f, "max_iters", cfg.fit.max_iters);
    read(f, "step", cfg.fit.step);
    read(f, "max_halvings", cfg.fit.max_halvings);
    read(f, "fd_step", cfg.fit.fd_step);
    read(f, "tolerance", cfg.fit.tolerance);
    read(f, "loss_floor", cfg.fit.loss_floor);
    read(f, "damping", cfg.fit.damping);
    read(f, "freeze_alignment", cfg.fit.freeze_alignment);
    read(f, "jobs", cfg.fit.jobs);
    if (f.contains("terms")) {
      std::vector<std::string> terms;
      read(f, "terms", terms);
      cfg.fit.mask = TermMask::parse(terms);
    }
  }
  if (j.contains("rig")) {
    const json& r = j.at("rig");
    require_object(r, "rig", {"seed", "path"});
    read(r, "seed", cfg.rig_seed);
    if (r.contains("path")) {
      std::string path;
      read(r, "path", path);
      std::filesystem::path p(path);
      cfg.rig_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
  }
  cfg.validate();
  return cfg;
}

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

AppConfig load_config(const std::filesystem::path& path) {
  return config_from_json(parse_json_file(path), path.parent_path());
}

InteractionConfig interaction_from_json(const json& j) {
  InteractionConfig cfg;
  bool full_config = false;
  for (const char* key : {"scene", "interaction", "kernel", "loss_weights", "fit", "rig"}) {
    full_config = full_config || (j.is_object() && j.contains(key));
  }
  if (full_config) {
    cfg = config_from_json(j).interaction();
  } else {
    read_interaction(j, cfg);
  }
  cfg.validate();
  return cfg;
}

InteractionConfig load_interaction_config(const std::filesystem::path& path) {
  return interaction_from_json(parse_json_file(path));
}

HandModelPair make_models(const AppConfig& cfg) {
  if (cfg.rig_path) return HandModelPair::from_right(load_rig(*cfg.rig_path));
  return HandModelPair::toy(cfg.rig_seed);
}

}  // namespace acr
