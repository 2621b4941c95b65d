#include "acr/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "acr/aggregation.hpp"
#include "acr/config.hpp"
#include "acr/errors.hpp"
#include "acr/fitting.hpp"
#include "acr/io.hpp"
#include "acr/synth.hpp"

namespace acr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void Context::log(const std::string& message) const {
  if (verbose) err << "[acr] " << message << "\n";
}

int report_error(const Context& ctx, const std::exception& e) {
  ctx.err << "error: " << e.what() << "\n";
  return 1;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("ACR_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long value = std::stoull(env, &used);
      if (used == std::string_view(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("ACR_SEED is not an unsigned integer: '") + env + "'");
  }
  return fallback;
}

namespace {

AppConfig config_or_default(const std::optional<fs::path>& path) {
  return path ? load_config(*path) : AppConfig{};
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

json vec2_json(const Vec2& v) { return {v.x(), v.y()}; }

json metrics_json(const HandMetrics& m) {
  return {{"mpjpe_mm", m.mpjpe_mm}, {"pa_mpjpe_mm", m.pa_mpjpe_mm}, {"mpvpe_mm", m.mpvpe_mm},
          {"pa_mpvpe_mm", m.pa_mpvpe_mm}};
}

// Hands of any result document: scene files, aggregate output and fit output
// all store present hands as objects carrying pose6d / shape / camera.
HandSlots hands_from_document(const json& j) {
  if (!j.is_object()) throw FormatError("expected a JSON object with hand entries");
  HandSlots out;
  for (Handedness side : kBothHands) {
    const std::string key(name_of(side));
    if (j.contains(key) && j.at(key).is_object() && j.at(key).contains("pose6d")) {
      out[index_of(side)] = params_from_json(j.at(key), side);
    }
  }
  return out;
}

}  // namespace

int cmd_synth(const SynthArgs& args, const Context& ctx) {
  if (args.count < 0) throw InvalidArgument("--count must be nonnegative");
  if (args.jobs < 1) throw InvalidArgument("--jobs must be at least 1");
  const AppConfig cfg = config_or_default(args.config);
  const HandModelPair models = make_models(cfg);
  const std::uint64_t base = resolve_seed(args.seed);
  ensure_directory(args.out);

  std::atomic<int> next{0};
  std::mutex failure_lock;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < args.count; i = next++) {
      try {
        const Scene scene = sample_scene(base + static_cast<std::uint64_t>(i), cfg.synth, models);
        save_scene(scene.spec, args.out / ("scene_" + std::to_string(i) + ".json"));
        write_tensor(args.out / ("maps_" + std::to_string(i) + ".acrt"), tensor_from_stack(oracle_maps(scene)));
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < std::min(args.jobs, std::max(args.count, 1)); ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  ctx.log("wrote " + std::to_string(args.count) + " scenes to " + args.out.string());
  return 0;
}

int cmd_aggregate(const AggregateArgs& args, const Context& ctx) {
  const InteractionConfig icfg =
      args.interaction_config ? load_interaction_config(*args.interaction_config) : InteractionConfig{};
  const MapStack maps = stack_from_tensor(read_tensor(args.maps));
  ctx.log("read map stack " + std::to_string(maps.height()) + "x" + std::to_string(maps.width()));
  const AggregationResult result = run_aggregation(maps, AggregationHeads{}, icfg);

  json doc = {{"lambda", result.lambda}};
  for (Handedness side : kBothHands) {
    const HandAggregate& hand = result[side];
    json h = {{"present", hand.detection.present}};
    if (hand.detection.present) {
      h["center"] = vec2_json(hand.detection.center);
      h["repulsed_center"] = vec2_json(hand.repulsed_center);
      h["kernel"] = hand.detection.kernel;
      h["peak"] = hand.detection.peak;
      h["vector"] = std::vector<double>(hand.output.data(), hand.output.data() + hand.output.size());
      h.update(params_to_json(*hand.params));
    }
    doc[std::string(name_of(side))] = std::move(h);
  }
  const std::string text = doc.dump(2) + "\n";
  if (args.out) {
    write_file_atomic(*args.out, text);
  } else {
    ctx.out << text;
  }
  return 0;
}

int cmd_fit(const FitArgs& args, const Context& ctx) {
  if (!(args.noise >= 0.0)) throw InvalidArgument("--noise must be nonnegative");
  const AppConfig cfg = config_or_default(args.config);
  const HandModelPair models = make_models(cfg);
  const SceneSpec spec = load_scene(args.scene);
  const Scene scene = derive_scene(spec, models, cfg.synth);
  if (scene.hand_count() == 0) throw InvalidArgument("scene has no hands to fit");
  const std::uint64_t seed = resolve_seed(args.seed, spec.seed);

  HandSlots init;
  for (Handedness side : kBothHands) {
    if (scene[side]) {
      init[index_of(side)] = perturb_params(scene[side]->params, args.noise, seed + static_cast<std::uint64_t>(index_of(side)));
    }
  }
  const FitResult result = fit_scene(scene, init, models, cfg.fit);
  ctx.log("fit stopped after " + std::to_string(result.iterations) + " iterations: " + result.stop_reason);

  json doc = {{"iterations", result.iterations},
              {"stop_reason", result.stop_reason},
              {"initial_loss", result.trace.front().total},
              {"final_loss", result.trace.back().total}};
  for (Handedness side : kBothHands) {
    const int i = index_of(side);
    if (!result.params[i]) continue;
    json h = params_to_json(*result.params[i]);
    h["initial"] = metrics_json(*result.initial_metrics[i]);
    h["final"] = metrics_json(*result.final_metrics[i]);
    doc[std::string(name_of(side))] = std::move(h);
  }
  ensure_directory(args.out);
  write_file_atomic(args.out / "trace.csv", trace_csv(result, cfg.fit.mask));
  write_file_atomic(args.out / "fit.json", doc.dump(2) + "\n");
  return 0;
}

int cmd_export(const ExportArgs& args, const Context& ctx) {
  const AppConfig cfg = config_or_default(args.config);
  const HandModelPair models = make_models(cfg);
  const Scene scene = derive_scene(load_scene(args.scene), models, cfg.synth);
  if (args.obj_dir) {
    ensure_directory(*args.obj_dir);
    for (Handedness side : kBothHands) {
      if (!scene[side]) continue;
      const fs::path path = *args.obj_dir / ("hand_" + std::string(name_of(side)) + ".obj");
      write_file_atomic(path, encode_obj(scene[side]->mesh, models[side].rig().faces));
      ctx.log("wrote " + path.string());
    }
  }
  if (args.heatmap_dir) {
    ensure_directory(*args.heatmap_dir);
    for (Handedness side : kBothHands) {
      const fs::path path = *args.heatmap_dir / ("center_" + std::string(name_of(side)) + ".pgm");
      const FeatureMap& m = scene.center_map;
      write_file_atomic(path, encode_pgm(m.channel(index_of(side)), m.height, m.width));
      ctx.log("wrote " + path.string());
    }
  }
  return 0;
}

int cmd_eval(const EvalArgs& args, const Context& ctx) {
  const AppConfig cfg = config_or_default(args.config);
  const HandModelPair models = make_models(cfg);
  const HandSlots pred = hands_from_document(parse_json_file(args.pred));
  const HandSlots gt = hands_from_document(parse_json_file(args.gt));

  json doc = json::object();
  HandMetrics mean;
  int count = 0;
  for (Handedness side : kBothHands) {
    const int i = index_of(side);
    if (pred[i].has_value() != gt[i].has_value()) {
      throw InvalidArgument("hand presence differs between prediction and ground truth (" +
                            std::string(name_of(side)) + ")");
    }
    if (!gt[i]) continue;
    const HandMetrics m = hand_metrics(models[side], *pred[i], *gt[i]);
    doc[std::string(name_of(side))] = metrics_json(m);
    mean.mpjpe_mm += m.mpjpe_mm;
    mean.pa_mpjpe_mm += m.pa_mpjpe_mm;
    mean.mpvpe_mm += m.mpvpe_mm;
    mean.pa_mpvpe_mm += m.pa_mpvpe_mm;
    ++count;
  }
  if (count == 0) throw InvalidArgument("no hands to evaluate");
  mean.mpjpe_mm /= count;
  mean.pa_mpjpe_mm /= count;
  mean.mpvpe_mm /= count;
  mean.pa_mpvpe_mm /= count;
  doc["mean"] = metrics_json(mean);
  ctx.out << doc.dump(2) << "\n";
  return 0;
}

}  // namespace acr::cli
