#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "acr/aggregation.hpp"
#include "acr/errors.hpp"
#include "acr/losses.hpp"
#include "acr/rotation.hpp"
#include "acr/synth.hpp"

using namespace acr;

namespace {

const HandModelPair& models() {
  static const HandModelPair pair = HandModelPair::toy();
  return pair;
}

SynthConfig two_hand_config(double interaction) {
  SynthConfig cfg;
  cfg.two_hand_prob = 1.0;
  cfg.interaction_prob = interaction;
  return cfg;
}

}  // namespace

TEST_CASE("sampling is deterministic per seed") {
  const SynthConfig cfg;
  for (std::uint64_t seed : {0ull, 1ull, 77ull, 123456789ull}) {
    const Scene a = sample_scene(seed, cfg, models());
    const Scene b = sample_scene(seed, cfg, models());
    CHECK(scene_to_json(a.spec).dump() == scene_to_json(b.spec).dump());
    CHECK(a.center_map == b.center_map);
    CHECK(a.part_labels == b.part_labels);
    const MapStack ma = oracle_maps(a), mb = oracle_maps(b);
    CHECK(ma.param_map == mb.param_map);
    CHECK(ma.part_map == mb.part_map);
  }
  const Scene x = sample_scene(1, cfg, models());
  const Scene y = sample_scene(2, cfg, models());
  CHECK(scene_to_json(x.spec).dump() != scene_to_json(y.spec).dump());
}

TEST_CASE("sampled parameters stay in range") {
  SynthConfig cfg;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    for (const auto& hand : s.hands) {
      if (!hand) continue;
      for (int j = 0; j < kNumParts; ++j) {
        const Mat3 r = rot6d_to_matrix(Eigen::Matrix<double, 6, 1>(hand->params.pose6d.row(j).transpose()));
        const double angle = Eigen::AngleAxisd(r).angle();
        CHECK(angle <= cfg.max_joint_angle + 1e-9);
      }
      CHECK(hand->params.shape.cwiseAbs().maxCoeff() <= 2.0);
      CHECK(hand->params.camera.s >= cfg.min_scale);
      CHECK(hand->params.camera.s <= cfg.max_scale);
      CHECK(hand->center.has_value());
    }
  }
}

TEST_CASE("single-hand configuration never produces two hands") {
  SynthConfig cfg;
  cfg.two_hand_prob = 0.0;
  int lefts = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    REQUIRE(s.hand_count() == 1);
    lefts += s.hands[0].has_value();
    const AggregationResult r = run_aggregation(oracle_maps(s), AggregationHeads{}, InteractionConfig{});
    CHECK(r.lambda == 0.0);
  }
  CHECK(lefts > 50);
  CHECK(lefts < 150);
}

TEST_CASE("interacting scenes lie inside the interaction field") {
  const SynthConfig cfg = two_hand_config(1.0);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    REQUIRE(s.hand_count() == 2);
    const SceneHand& l = *s.hands[0];
    const SceneHand& r = *s.hands[1];
    const double d = (*l.center - *r.center).norm();
    CHECK(d <= interaction_field(l.kernel, r.kernel, 2.0));
  }
}

TEST_CASE("separated scenes lie outside the interaction field") {
  const SynthConfig cfg = two_hand_config(0.0);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    const SceneHand& l = *s.hands[0];
    const SceneHand& r = *s.hands[1];
    CHECK((*l.center - *r.center).norm() > interaction_field(l.kernel, r.kernel, 2.0));
    CHECK(*l.map_center == *l.center);
    const AggregationResult agg = run_aggregation(oracle_maps(s), AggregationHeads{}, InteractionConfig{});
    CHECK(agg.lambda == 0.0);
  }
}

TEST_CASE("two-hand scenes never have coincident centers") {
  const SynthConfig cfg = two_hand_config(0.5);
  double closest = INFINITY;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    closest = std::min(closest, (*s.hands[0]->center - *s.hands[1]->center).norm());
  }
  CHECK(closest > kCoincidentEps);
}

TEST_CASE("derived quantities match the parameters") {
  SynthConfig cfg;
  cfg.truncation_prob = 0.5;
  cfg.occlusion_prob = 0.5;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    for (Handedness side : kBothHands) {
      const auto& hand = s[side];
      if (!hand) continue;
      const HandModel& model = models()[side];
      CHECK((hand->joints2d - project_weak_perspective<kNumJoints>(hand->joints3d, hand->params.camera))
                .cwiseAbs()
                .maxCoeff() < 1e-9);
      CHECK((hand->mesh - model.skin_mesh(hand->params)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((hand->joints3d - model.posed_joints(hand->params)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((hand->bones - bone_lengths(hand->joints3d, model.rig().bone_edges)).cwiseAbs().maxCoeff() < 1e-9);
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec2 p = hand->joints2d.row(j).transpose();
        const bool expected = s.spec.crop.contains(p) && !(s.spec.occluder && s.spec.occluder->contains(p));
        CHECK(hand->visible[j] == expected);
      }
    }
    for (int h = 0; h < kMapSize; ++h) {
      for (int w = 0; w < kMapSize; ++w) {
        const Vec2 p(w, h);
        if (!s.spec.crop.contains(p) || (s.spec.occluder && s.spec.occluder->contains(p))) {
          CHECK(s.part_labels(h, w) == 0);
        }
      }
    }
  }
}

TEST_CASE("truncation and occlusion hide joints") {
  SynthConfig cfg;
  cfg.truncation_prob = 1.0;
  cfg.occlusion_prob = 0.0;
  int hidden = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    CHECK(!(s.spec.crop == Rect::full_map()));
    for (const auto& hand : s.hands)
      if (hand) hidden += std::count(hand->visible.begin(), hand->visible.end(), false);
  }
  CHECK(hidden > 50);
  cfg.truncation_prob = 0.0;
  cfg.occlusion_prob = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(sample_scene(seed, cfg, models()).spec.occluder.has_value());
}

TEST_CASE("oracle maps have the stack layout and carry the parameters") {
  SynthConfig cfg;
  cfg.two_hand_prob = 0.0;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    const MapStack m = oracle_maps(s);
    CHECK(m.param_map.channels == 218);
    CHECK(m.center_map.channels == 2);
    CHECK(m.part_map.channels == 33);
    CHECK(m.cross_map.channels == 218);
    for (const FeatureMap* f : {&m.param_map, &m.center_map, &m.part_map, &m.cross_map}) {
      CHECK(f->height == 64);
      CHECK(f->width == 64);
    }
    if (!s.hands[0]) {
      CHECK(m.center_of(Handedness::Left).data.isZero(0.0));
      ++checked;
    }
    for (Handedness side : kBothHands) {
      if (!s[side]) continue;
      const Eigen::VectorXd pixel = m.params_of(side).data.col(37 * 64 + 5);
      const HandParams decoded = decode_param_vector(pixel, side);
      CHECK((decoded.pose6d - s[side]->params.pose6d).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((decoded.shape - s[side]->params.shape).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(decoded.camera.s == doctest::Approx(s[side]->params.camera.s).epsilon(1e-12));
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("aggregation recovers ground truth from oracle maps") {
  SynthConfig cfg;
  cfg.truncation_prob = 0.3;
  cfg.occlusion_prob = 0.3;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    const AggregationResult r = run_aggregation(oracle_maps(s), AggregationHeads{}, cfg.interaction);
    for (Handedness side : kBothHands) {
      REQUIRE(r[side].params.has_value() == s[side].has_value());
      if (!s[side]) continue;
      const HandParams& gt = s[side]->params;
      const HandParams& got = *r[side].params;
      CHECK((got.pose6d - gt.pose6d).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((got.shape - gt.shape).cwiseAbs().maxCoeff() < 1e-5);
      CHECK(std::abs(got.camera.s - gt.camera.s) < 1e-4);
      CHECK(std::abs(got.camera.tx - gt.camera.tx) < 1e-4);
      CHECK(std::abs(got.camera.ty - gt.camera.ty) < 1e-4);
      CHECK(r[side].detection.kernel == doctest::Approx(s[side]->kernel).epsilon(1e-6));
    }
  }
}

TEST_CASE("noisy oracle perturbs only the parameter map") {
  const Scene s = sample_scene(3, SynthConfig{}, models());
  const MapStack clean = oracle_maps(s);
  const MapStack noisy = oracle_maps(s, 0.1, 9);
  CHECK(!(noisy.param_map == clean.param_map));
  CHECK(noisy.cross_map == clean.cross_map);
  CHECK(noisy.center_map == clean.center_map);
  CHECK(oracle_maps(s, 0.1, 9).param_map == noisy.param_map);
}

TEST_CASE("perturb_params examples") {
  const Scene s = sample_scene(5, SynthConfig{}, models());
  const Handedness side = s.hands[1] ? Handedness::Right : Handedness::Left;
  const HandParams& gt = s[side]->params;
  CHECK(perturb_params(gt, 0.0, 1) == gt);
  CHECK(perturb_params(gt, 0.1, 42) == perturb_params(gt, 0.1, 42));
  CHECK(!(perturb_params(gt, 0.1, 42) == perturb_params(gt, 0.1, 43)));
  const HandParams p = perturb_params(gt, 0.1, 42);
  CHECK(p.handedness == gt.handedness);
  const JointErrors e = joint_errors(models()[side].posed_joints(p), s[side]->joints3d);
  CHECK(e.mpjpe_mm > 0.0);
  CHECK_THROWS_AS(perturb_params(gt, -1.0, 1), InvalidArgument);
}

TEST_CASE("scene JSON round-trips value-exactly") {
  SynthConfig cfg;
  cfg.truncation_prob = 0.5;
  cfg.occlusion_prob = 0.5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = sample_scene(seed, cfg, models());
    const std::string text = scene_to_json(s.spec).dump();
    const SceneSpec back = scene_from_json(nlohmann::json::parse(text));
    CHECK(back == s.spec);
    const Scene again = derive_scene(back, models());
    CHECK(again.center_map == s.center_map);
    CHECK(again.part_labels == s.part_labels);
  }
  const auto j = scene_to_json(sample_scene(0, SynthConfig{}, models()).spec);
  CHECK(j.contains("seed"));
  CHECK((j.contains("left") || j.contains("right")));
  CHECK_THROWS_AS(scene_from_json(nlohmann::json::parse(R"({"seed": 1, "left": {"pose6d": [1, 2]}})")),
                  FormatError);
  CHECK_THROWS_AS(scene_from_json(nlohmann::json::array()), FormatError);
}

TEST_CASE("synth config validation") {
  SynthConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.two_hand_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.min_scale = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
