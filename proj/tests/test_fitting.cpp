#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "acr/errors.hpp"
#include "acr/fitting.hpp"

using namespace acr;

namespace {

const HandModelPair& models() {
  static const HandModelPair pair = HandModelPair::toy();
  return pair;
}

Scene single_hand_scene(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.two_hand_prob = 0.0;
  return sample_scene(seed, cfg, models());
}

HandSlots perturbed(const Scene& s, double noise, std::uint64_t seed) {
  HandSlots init;
  for (Handedness side : kBothHands) {
    if (s[side]) init[index_of(side)] = perturb_params(s[side]->params, noise, seed + index_of(side));
  }
  return init;
}

bool monotone(const FitResult& r) {
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    if (r.trace[i].total > r.trace[i - 1].total) return false;
  return true;
}

// Central-difference gradient of the mano-only loss at the fitted parameters.
double mano_gradient_norm(const HandParams& p, const HandParams& gt, const LossWeights& w) {
  ParamVector x = p.flatten();
  double sq = 0.0;
  for (int i = 0; i < kPoseShapeDims; ++i) {
    ParamVector a = x, b = x;
    a(i) += 1e-4;
    b(i) -= 1e-4;
    const double d = (mano_param_loss(HandParams::unflatten(a, p.handedness), gt, w) -
                      mano_param_loss(HandParams::unflatten(b, p.handedness), gt, w)) /
                     2e-4;
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("fitting from ground truth stops immediately") {
  for (std::uint64_t seed : {0ull, 4ull}) {
    const Scene s = single_hand_scene(seed);
    const FitResult r = fit_scene(s, perturbed(s, 0.0, 1), models());
    CHECK(r.iterations == 0);
    CHECK(r.stop_reason == "loss floor");
    CHECK(r.trace.back().total < 1e-9);
    for (const auto& m : r.final_metrics)
      if (m) CHECK(m->mpjpe_mm < 1e-6);
  }
}

TEST_CASE("single-hand fit recovers the pose") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Scene s = single_hand_scene(seed);
    const FitResult r = fit_scene(s, perturbed(s, 0.05, 100 + seed), models());
    CHECK(monotone(r));
    CHECK(r.iterations <= 300);
    for (const auto& hand_metrics : std::array{r.initial_metrics, r.final_metrics}) CHECK(hand_metrics.size() == 2);
    for (Handedness side : kBothHands) {
      if (!s[side]) continue;
      const double before = r.initial_metrics[index_of(side)]->mpjpe_mm;
      const double after = r.final_metrics[index_of(side)]->mpjpe_mm;
      CHECK(before > 0.5);
      CHECK(after < 0.1 * before);
    }
  }
}

TEST_CASE("interacting two-hand fit") {
  SynthConfig cfg;
  cfg.two_hand_prob = 1.0;
  cfg.interaction_prob = 1.0;
  const Scene s = sample_scene(11, cfg, models());
  const FitResult r = fit_scene(s, perturbed(s, 0.05, 7), models());
  CHECK(monotone(r));
  for (Handedness side : kBothHands) {
    CHECK(r.final_metrics[index_of(side)]->mpjpe_mm < 0.25 * r.initial_metrics[index_of(side)]->mpjpe_mm);
  }
}

TEST_CASE("mano-only fit is an exact quadratic solve") {
  const Scene s = single_hand_scene(2);
  FitConfig cfg;
  cfg.mask = TermMask::only(LossTerm::Mano);
  const HandSlots init = perturbed(s, 0.2, 3);
  const FitResult r = fit_scene(s, init, models(), cfg);
  CHECK(monotone(r));
  for (Handedness side : kBothHands) {
    if (!s[side]) continue;
    const HandParams& fitted = *r.params[index_of(side)];
    const HandParams& gt = s[side]->params;
    CHECK((fitted.pose6d - gt.pose6d).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((fitted.shape - gt.shape).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(mano_gradient_norm(fitted, gt, cfg.weights) < 1e-5);
    // The camera is not supervised by this term and must stay put.
    CHECK(fitted.camera == init[index_of(side)]->camera);
  }
}

TEST_CASE("fitting is deterministic and independent of probe threads") {
  const Scene s = single_hand_scene(5);
  const HandSlots init = perturbed(s, 0.05, 9);
  FitConfig cfg;
  cfg.max_iters = 40;
  const FitResult a = fit_scene(s, init, models(), cfg);
  const FitResult b = fit_scene(s, init, models(), cfg);
  cfg.jobs = 3;
  const FitResult c = fit_scene(s, init, models(), cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  REQUIRE(a.trace.size() == c.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].total == b.trace[i].total);
    CHECK(a.trace[i].total == c.trace[i].total);
  }
  CHECK(a.params == c.params);
}

TEST_CASE("fit errors and configuration") {
  const Scene s = single_hand_scene(1);
  HandSlots init = perturbed(s, 0.0, 1);
  HandSlots wrong;
  wrong[init[0] ? 1 : 0] = HandParams{};
  CHECK_THROWS_AS(fit_scene(s, wrong, models()), InvalidArgument);

  HandSlots bad = init;
  for (auto& p : bad)
    if (p) p->camera.s = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_scene(s, bad, models()), InitializationError);
  for (auto& p : bad)
    if (p) p = HandParams{Pose6d::Zero(), ShapeCoeffs::Zero(), WeakCamera{}, p->handedness};
  CHECK_THROWS_AS(fit_scene(s, bad, models()), InitializationError);

  FitConfig cfg;
  cfg.fd_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.jobs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("trace CSV layout") {
  const Scene s = single_hand_scene(3);
  FitConfig cfg;
  cfg.max_iters = 5;
  const FitResult r = fit_scene(s, perturbed(s, 0.05, 2), models(), cfg);
  const std::string csv = trace_csv(r, cfg.mask);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,total,mano,mpjpe,pa_mpjpe,pj2d,bone");
  int expected = 0;
  while (std::getline(in, line)) {
    CHECK(std::stoi(line.substr(0, line.find(','))) == expected);
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
    ++expected;
  }
  CHECK(expected == static_cast<int>(r.trace.size()));
}

TEST_CASE("hand metrics") {
  const Scene s = single_hand_scene(8);
  const Handedness side = s.hands[0] ? Handedness::Left : Handedness::Right;
  const HandModel& model = models()[side];
  const HandParams& gt = s[side]->params;
  const HandMetrics zero = hand_metrics(model, gt, gt);
  CHECK(zero.mpjpe_mm == 0.0);
  CHECK(zero.mpvpe_mm == 0.0);
  CHECK(zero.pa_mpjpe_mm < 1e-6);
  CHECK(zero.pa_mpvpe_mm < 1e-6);

  HandParams moved = gt;
  moved.camera.tx += 5.0;
  moved.camera.s *= 2.0;
  const HandMetrics cam = hand_metrics(model, moved, gt);
  CHECK(cam.mpjpe_mm == 0.0);

  const HandParams noisy = perturb_params(gt, 0.1, 4);
  const HandMetrics m = hand_metrics(model, noisy, gt);
  CHECK(m.mpjpe_mm > 0.0);
  CHECK(m.pa_mpjpe_mm <= m.mpjpe_mm + 1e-9);
  CHECK(m.pa_mpvpe_mm <= m.mpvpe_mm + 1e-9);
}
