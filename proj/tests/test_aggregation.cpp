#include <doctest.h>

#include <cmath>
#include <random>

#include "acr/aggregation.hpp"
#include "acr/attention_maps.hpp"
#include "acr/errors.hpp"
#include "brute_force.hpp"

using namespace acr;

namespace {

FeatureMap random_map(std::mt19937_64& rng, int c, int h, int w, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  FeatureMap m(c, h, w);
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = g(rng);
  return m;
}

PointwiseLinear random_linear(std::mt19937_64& rng, int out, int in, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  PointwiseLinear f = PointwiseLinear::zeros(out, in);
  for (Eigen::Index i = 0; i < f.weight.size(); ++i) f.weight.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < f.bias.size(); ++i) f.bias(i) = g(rng);
  return f;
}

double max_diff(const Eigen::VectorXd& a, const std::vector<double>& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a(i) - b[static_cast<std::size_t>(i)]));
  return m;
}

}  // namespace

TEST_CASE("collision_aware_repulsion examples") {
  auto far = collision_aware_repulsion({10, 0}, {0, 0}, 2, 2, 0.5);
  CHECK(far.left == Vec2(10, 0));
  CHECK(far.right == Vec2(0, 0));

  auto near = collision_aware_repulsion({3, 0}, {0, 0}, 2, 2, 0.5);
  CHECK(near.left == Vec2(4, 0));
  CHECK(near.right == Vec2(-1, 0));
  CHECK((near.left - near.right).norm() == 5.0);

  for (double d : {0.5, 2.0, 4.9, 7.0}) {
    auto still = collision_aware_repulsion({d, 0}, {0, 0}, 2, 2, 0.0);
    CHECK(still.left == Vec2(d, 0));
    CHECK(still.right == Vec2(0, 0));
  }

  CHECK_THROWS_AS(collision_aware_repulsion({1, 1}, {1, 1}, 2, 2, 0.5), CoincidentCenters);
}

TEST_CASE("repulsion preserves the midpoint and follows the distance law") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0.0, 64.0), kern(2.0, 16.0), unit(0.0, 1.0);
  int tested = 0;
  while (tested < 2000) {
    const double kl = kern(rng), kr = kern(rng), alpha = 1.0 - unit(rng);
    const Vec2 cl(pos(rng), pos(rng));
    const double reach = kl + kr + 1.0;
    const double ang = 6.283185307179586 * unit(rng);
    const Vec2 cr = cl + (0.01 + (reach - 0.02) * unit(rng)) * Vec2(std::cos(ang), std::sin(ang));
    const double d = (cl - cr).norm();
    if (!(d < reach)) continue;
    ++tested;
    const CenterPair out = collision_aware_repulsion(cl, cr, kl, kr, alpha);
    CHECK(((out.left + out.right) - (cl + cr)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs((out.left - out.right).norm() - (d + 2 * alpha * (reach - d))) < 1e-9);
  }
}

TEST_CASE("interaction_intensity") {
  CHECK(interaction_intensity(Vec2(3, 4), Vec2(0, 0), 2, 2, 2.0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(interaction_intensity(Vec2(30, 0), Vec2(0, 0), 2, 2, 2.0) == 0.0);
  // d == IF exactly.
  CHECK(interaction_intensity(Vec2(10, 0), Vec2(0, 0), 2, 2, 2.0) == 0.0);
  CHECK(interaction_intensity(Vec2(10 - 1e-12, 0), Vec2(0, 0), 2, 2, 2.0) < 1e-9);
  CHECK(interaction_intensity(Vec2(10 + 1e-12, 0), Vec2(0, 0), 2, 2, 2.0) == 0.0);
  CHECK_THROWS_AS(interaction_intensity(Vec2(2, 2), Vec2(2, 2), 2, 2, 2.0), CoincidentCenters);

  InteractionConfig cfg;
  CHECK(interaction_intensity(std::optional<Vec2>(), std::optional<Vec2>(Vec2(1, 1)), 2, 2, cfg) == 0.0);
  CHECK(interaction_intensity(std::optional<Vec2>(Vec2(3, 4)), std::optional<Vec2>(Vec2(0, 0)), 2, 2, cfg) ==
        doctest::Approx(7.0));
  cfg.lambda_clamp = 1.5;
  CHECK(interaction_intensity(std::optional<Vec2>(Vec2(3, 4)), std::optional<Vec2>(Vec2(0, 0)), 2, 2, cfg) == 1.5);
}

TEST_CASE("interaction config validation") {
  InteractionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.alpha = 1.0;
  cfg.gamma = 0.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("global_feature special cases") {
  std::mt19937_64 rng(2);
  const FeatureMap params = random_map(rng, kParamDims, 8, 8);
  const PointwiseLinear id = PointwiseLinear::identity(kParamDims);

  const Eigen::VectorXd mean = params.data.rowwise().mean();
  CHECK((global_feature(FeatureMap(1, 8, 8), params, id) - mean).cwiseAbs().maxCoeff() < 1e-12);

  FeatureMap spike(1, 8, 8);
  spike.at(0, 3, 6) = 1000.0;
  CHECK((global_feature(spike, params, id) - params.data.col(3 * 8 + 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("part_feature special cases") {
  std::mt19937_64 rng(3);
  const FeatureMap params = random_map(rng, kParamDims, 6, 6);
  const Eigen::MatrixXd uniform = part_feature(FeatureMap(kNumParts, 6, 6), params);
  const Eigen::RowVectorXd mean = params.data.rowwise().mean().transpose();
  for (int j = 0; j < kNumParts; ++j) CHECK((uniform.row(j) - mean).cwiseAbs().maxCoeff() < 1e-12);

  FeatureMap spikes(kNumParts, 6, 6);
  spikes.at(5, 2, 4) = 1000.0;
  const Eigen::MatrixXd f = part_feature(spikes, params);
  CHECK((f.row(5) - params.data.col(2 * 6 + 4).transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((f.row(4) - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cross_hand_feature special cases") {
  std::mt19937_64 rng(4);
  const FeatureMap cross = random_map(rng, kParamDims, 5, 7);
  const PointwiseLinear id = PointwiseLinear::identity(kParamDims);
  CHECK((cross_hand_feature(FeatureMap(1, 5, 7), cross, id) - cross.data.rowwise().mean()).cwiseAbs().maxCoeff() <
        1e-12);
  FeatureMap spike(1, 5, 7);
  spike.at(0, 4, 0) = 900.0;
  CHECK((cross_hand_feature(spike, cross, id) - cross.data.col(4 * 7)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention extractions match the pixel-loop oracle and are shift invariant") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureMap center = random_map(rng, 1, 4, 4, 2.0);
    const FeatureMap parts = random_map(rng, kNumParts, 4, 4, 2.0);
    const FeatureMap params = random_map(rng, kParamDims, 4, 4);
    const PointwiseLinear f = random_linear(rng, kParamDims, kParamDims, 0.1);

    const Eigen::VectorXd g = global_feature(center, params, f);
    CHECK(max_diff(g, oracle::pooled(center, params, f)) < 1e-6);
    CHECK(max_diff(cross_hand_feature(center, params, f), oracle::pooled(center, params, f)) < 1e-6);

    const Eigen::MatrixXd p = part_feature(parts, params);
    const auto ref = oracle::parts(parts, params);
    for (int j = 0; j < kNumParts; ++j) CHECK(max_diff(p.row(j).transpose(), ref[static_cast<std::size_t>(j)]) < 1e-6);

    FeatureMap shifted = center;
    shifted.data.array() += 41.5;
    CHECK((global_feature(shifted, params, f) - g).cwiseAbs().maxCoeff() < 1e-6);
    FeatureMap shifted_parts = parts;
    shifted_parts.data.array() -= 17.0;
    CHECK((part_feature(shifted_parts, params) - p).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("sharpening center logits keeps the attention mode") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const FeatureMap center = random_map(rng, 1, 8, 8);
    Eigen::Index before = 0, after = 0;
    spatial_softmax(center.channel(0)).maxCoeff(&before);
    const double c = 1.0 + 10.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    spatial_softmax(c * center.channel(0)).maxCoeff(&after);
    CHECK(before == after);
  }
}

TEST_CASE("aggregate_output") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Eigen::VectorXd fg(kParamDims), fc(kParamDims);
  Eigen::MatrixXd fp(kNumParts, kParamDims);
  for (int i = 0; i < kParamDims; ++i) {
    fg(i) = g(rng);
    fc(i) = g(rng);
  }
  for (Eigen::Index i = 0; i < fp.size(); ++i) fp.data()[i] = g(rng);

  const OutputHead pass = OutputHead::pass_through();
  CHECK(aggregate_output(fg, fp, fc, 3.7, pass) == fg);

  OutputHead random{random_linear(rng, kHiddenDims, kAggregateInputDims, 0.05),
                    random_linear(rng, kParamDims, kHiddenDims, 0.1)};
  const Eigen::VectorXd base = aggregate_output(fg, fp, fc, 0.0, random);
  CHECK(aggregate_output(fg, fp, (fc * 5.0 + Eigen::VectorXd::Ones(kParamDims)).eval(), 0.0, random) == base);

  const double lambda = 1.3;
  std::vector<double> input;
  for (int i = 0; i < kParamDims; ++i) input.push_back(fg(i));
  for (int j = 0; j < kNumParts; ++j)
    for (int i = 0; i < kParamDims; ++i) input.push_back(fp(j, i));
  for (int i = 0; i < kParamDims; ++i) input.push_back(lambda * fc(i));
  CHECK(max_diff(aggregate_output(fg, fp, fc, lambda, random), oracle::output_head(random, input)) < 1e-6);

  CHECK_THROWS_AS(aggregate_output(fg.head(10), fp, fc, 0.0, pass), InvalidArgument);
}

TEST_CASE("decode_param_vector") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  HandParams p;
  for (Eigen::Index i = 0; i < p.pose6d.size(); ++i) p.pose6d.data()[i] = g(rng);
  for (int i = 0; i < kNumShape; ++i) p.shape(i) = g(rng);
  p.camera = {97.5, 31.25, -4.0};
  p.handedness = Handedness::Left;

  const HandParams back = decode_param_vector(encode_param_vector(p), Handedness::Left);
  CHECK(back.pose6d == p.pose6d);
  CHECK(back.shape == p.shape);
  CHECK(std::abs(back.camera.s - p.camera.s) < 1e-12);
  CHECK(back.camera.tx == p.camera.tx);
  CHECK(back.camera.ty == p.camera.ty);

  const HandParams zero = decode_param_vector(Eigen::VectorXd::Zero(kParamDims), Handedness::Right);
  CHECK(zero.pose6d.isZero());
  CHECK(zero.camera.s > 0.0);

  for (double raw : {-1e6, -700.0, -30.0, -1.0, 0.0, 1.0, 40.0, 1e6}) CHECK(positive_scale(raw) > 0.0);
  for (double s : {1e-3, 0.5, 2.0, 150.0, 1e5}) CHECK(positive_scale(positive_scale_inverse(s)) == doctest::Approx(s).epsilon(1e-12));
  CHECK_THROWS_AS(positive_scale_inverse(0.0), InvalidArgument);
  CHECK_THROWS_AS(decode_param_vector(Eigen::VectorXd::Zero(12), Handedness::Right), InvalidArgument);
}

TEST_CASE("detect_hand reads center and kernel off a rendered Gaussian") {
  for (double k : {2.0, 3.0, 5.0, 16.0}) {
    const FeatureMap m = render_center_map({Vec2(20, 41), k}, 64, 64);
    const HandDetection d = detect_hand(m);
    CHECK(d.present);
    CHECK(d.center == Vec2(20, 41));
    CHECK(d.kernel == doctest::Approx(k).epsilon(1e-9));
  }
  CHECK_FALSE(detect_hand(FeatureMap(1, 64, 64)).present);
  FeatureMap weak(1, 8, 8);
  weak.at(0, 2, 2) = 0.2;
  CHECK_FALSE(detect_hand(weak).present);
}

TEST_CASE("run_aggregation gates lambda by hand presence and distance") {
  MapStack maps = MapStack::zeros();
  maps.center_map.data.row(0) = render_center_map({Vec2(20, 20), 2.0}, 64, 64).channel(0);
  SUBCASE("single hand") {
    const auto r = run_aggregation(maps, AggregationHeads{}, InteractionConfig{});
    CHECK(r.lambda == 0.0);
    CHECK(r[Handedness::Left].params.has_value());
    CHECK_FALSE(r[Handedness::Right].params.has_value());
  }
  SUBCASE("far apart") {
    maps.center_map.data.row(1) = render_center_map({Vec2(50, 50), 2.0}, 64, 64).channel(0);
    const auto r = run_aggregation(maps, AggregationHeads{}, InteractionConfig{});
    CHECK(r.lambda == 0.0);
    CHECK(r[Handedness::Left].repulsed_center == Vec2(20, 20));
    CHECK(r[Handedness::Right].repulsed_center == Vec2(50, 50));
  }
  SUBCASE("close hands interact") {
    maps.center_map.data.row(1) = render_center_map({Vec2(23, 24), 2.0}, 64, 64).channel(0);
    const auto r = run_aggregation(maps, AggregationHeads{}, InteractionConfig{});
    CHECK(r.lambda > 0.0);
    CHECK((r[Handedness::Left].repulsed_center - r[Handedness::Right].repulsed_center).norm() ==
          doctest::Approx(5.0));
  }
}
