#include "acr/aggregation.hpp"

#include <cmath>

#include "acr/attention_maps.hpp"
#include "acr/errors.hpp"

namespace acr {

OutputHead OutputHead::pass_through() {
  OutputHead head{PointwiseLinear::zeros(kHiddenDims, kAggregateInputDims),
                  PointwiseLinear::zeros(kParamDims, kHiddenDims)};
  for (int i = 0; i < kParamDims; ++i) {
    head.hidden.weight(i, i) = 1.0;
    head.hidden.weight(kParamDims + i, i) = -1.0;
    head.output.weight(i, i) = 1.0;
    head.output.weight(i, kParamDims + i) = -1.0;
  }
  return head;
}

void InteractionConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("interaction alpha must lie in (0, 1]");
  if (!(gamma >= 1.0)) throw InvalidArgument("interaction gamma must be >= 1");
  if (lambda_clamp && !(*lambda_clamp >= 0.0)) throw InvalidArgument("lambda clamp must be >= 0");
}

CenterPair collision_aware_repulsion(const Vec2& left, const Vec2& right, double kernel_left,
                                     double kernel_right, double alpha) {
  const Vec2 diff = left - right;
  const double d = diff.norm();
  if (d < kCoincidentEps) throw CoincidentCenters("hand centers coincide; repulsion direction undefined");
  const double reach = kernel_left + kernel_right + 1.0;
  if (d >= reach) return {left, right};
  const Vec2 repulsion = ((reach - d) / d) * diff;
  return {left + alpha * repulsion, right - alpha * repulsion};
}

double interaction_field(double kernel_left, double kernel_right, double gamma) {
  return gamma * (kernel_left + kernel_right + 1.0);
}

double interaction_intensity(const Vec2& left, const Vec2& right, double kernel_left, double kernel_right,
                             double gamma) {
  const Vec2 diff = left - right;
  const double d = diff.norm();
  if (d < kCoincidentEps) throw CoincidentCenters("hand centers coincide; interaction intensity undefined");
  const double field = interaction_field(kernel_left, kernel_right, gamma);
  if (d > field) return 0.0;
  return (field - d) / d * diff.lpNorm<1>();
}

double interaction_intensity(const std::optional<Vec2>& left, const std::optional<Vec2>& right,
                             double kernel_left, double kernel_right, const InteractionConfig& cfg) {
  if (!left || !right) return 0.0;
  const double lambda = interaction_intensity(*left, *right, kernel_left, kernel_right, cfg.gamma);
  return cfg.lambda_clamp ? std::min(lambda, *cfg.lambda_clamp) : lambda;
}

namespace {

void require_same_grid(const FeatureMap& a, const FeatureMap& b) {
  if (a.height != b.height || a.width != b.width) throw InvalidArgument("attention and feature maps differ in size");
}

Eigen::VectorXd attention_pool(const FeatureMap& logits, const FeatureMap& features) {
  require_same_grid(logits, features);
  if (logits.channels != 1) throw InvalidArgument("center attention must have one channel");
  const Eigen::RowVectorXd weights = spatial_softmax(logits.channel(0));
  return features.data * weights.transpose();
}

}  // namespace

Eigen::VectorXd global_feature(const FeatureMap& center_logits, const FeatureMap& param_map,
                               const PointwiseLinear& f_g) {
  return f_g(attention_pool(center_logits, param_map));
}

Eigen::MatrixXd part_feature(const FeatureMap& part_logits, const FeatureMap& param_map) {
  require_same_grid(part_logits, param_map);
  RowMatrix attention(part_logits.channels, part_logits.pixels());
  for (int j = 0; j < part_logits.channels; ++j) attention.row(j) = spatial_softmax(part_logits.channel(j));
  return attention * param_map.data.transpose();
}

Eigen::VectorXd cross_hand_feature(const FeatureMap& opposite_center_logits, const FeatureMap& cross_map,
                                   const PointwiseLinear& f_c) {
  return f_c(attention_pool(opposite_center_logits, cross_map));
}

Eigen::VectorXd aggregate_output(const Eigen::VectorXd& global, const Eigen::MatrixXd& parts,
                                 const Eigen::VectorXd& cross, double lambda, const OutputHead& f_out) {
  if (global.size() != kParamDims || cross.size() != kParamDims || parts.rows() != kNumParts ||
      parts.cols() != kParamDims) {
    throw InvalidArgument("aggregate_output: feature dimensions must be 109 / 16x109 / 109");
  }
  Eigen::VectorXd input(kAggregateInputDims);
  input.head(kParamDims) = global;
  for (int j = 0; j < kNumParts; ++j) {
    input.segment(kParamDims * (1 + j), kParamDims) = parts.row(j).transpose();
  }
  input.tail(kParamDims) = lambda * cross;
  return f_out(input);
}

double positive_scale(double raw) {
  const double softplus = raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
  return softplus + kScaleFloor;
}

double positive_scale_inverse(double scale) {
  const double y = scale - kScaleFloor;
  if (!(y > 0.0)) throw InvalidArgument("scale must exceed the positivity floor");
  return y > 20.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

HandParams decode_param_vector(const Eigen::VectorXd& values, Handedness side) {
  if (values.size() != kParamDims) throw InvalidArgument("parameter vector must have 109 entries");
  HandParams p;
  p.handedness = side;
  p.pose6d = Eigen::Map<const Pose6d>(values.data());
  p.shape = values.segment<kNumShape>(kPoseDims);
  p.camera = {positive_scale(values(kPoseShapeDims)), values(kPoseShapeDims + 1), values(kPoseShapeDims + 2)};
  return p;
}

ParamVector encode_param_vector(const HandParams& params) {
  ParamVector v = params.flatten();
  v(kPoseShapeDims) = positive_scale_inverse(params.camera.s);
  return v;
}

HandDetection detect_hand(const FeatureMap& center_map, double threshold) {
  HandDetection det;
  Eigen::Index best = 0;
  det.peak = center_map.channel(0).maxCoeff(&best);
  if (!(det.peak >= threshold)) return det;
  det.present = true;
  const int h = static_cast<int>(best / center_map.width);
  const int w = static_cast<int>(best % center_map.width);
  det.center = Vec2(w, h);

  double sum = 0.0;
  int count = 0;
  const std::array<std::pair<int, int>, 4> offsets = {{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};
  for (auto [dh, dw] : offsets) {
    const int nh = h + dh;
    const int nw = w + dw;
    if (nh < 0 || nw < 0 || nh >= center_map.height || nw >= center_map.width) continue;
    const double ratio = center_map.at(0, nh, nw) / det.peak;
    if (!(ratio > 0.0 && ratio < 1.0)) continue;
    sum += std::sqrt(-1.0 / (2.0 * std::log(ratio)));
    ++count;
  }
  det.kernel = count > 0 ? sum / count : 0.0;
  return det;
}

AggregationResult run_aggregation(const MapStack& maps, const AggregationHeads& heads,
                                  const InteractionConfig& cfg) {
  cfg.validate();
  AggregationResult result;
  auto& left = result.hands[0];
  auto& right = result.hands[1];
  left.detection = detect_hand(maps.center_of(Handedness::Left));
  right.detection = detect_hand(maps.center_of(Handedness::Right));
  left.repulsed_center = left.detection.center;
  right.repulsed_center = right.detection.center;

  if (left.detection.present && right.detection.present) {
    const CenterPair moved = collision_aware_repulsion(left.detection.center, right.detection.center,
                                                       left.detection.kernel, right.detection.kernel, cfg.alpha);
    left.repulsed_center = moved.left;
    right.repulsed_center = moved.right;
    result.lambda = interaction_intensity(std::optional<Vec2>(moved.left), std::optional<Vec2>(moved.right),
                                          left.detection.kernel, right.detection.kernel, cfg);
  }

  for (Handedness side : kBothHands) {
    HandAggregate& hand = result.hands[index_of(side)];
    const FeatureMap params = maps.params_of(side);
    hand.global = global_feature(maps.center_of(side), params, heads.f_g);
    hand.parts = part_feature(maps.parts_of(side), params);
    hand.cross = cross_hand_feature(maps.center_of(opposite(side)), maps.cross_of(side), heads.f_c);
    hand.output = aggregate_output(hand.global, hand.parts, hand.cross, result.lambda, heads.f_out);
    if (hand.detection.present) hand.params = decode_param_vector(hand.output, side);
  }
  return result;
}

}  // namespace acr
