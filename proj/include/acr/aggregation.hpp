#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>

#include "acr/feature_map.hpp"
#include "acr/types.hpp"

namespace acr {

inline constexpr int kHiddenDims = 256;
inline constexpr int kAggregateInputDims = kParamDims + kNumParts * kParamDims + kParamDims;  // 1962
inline constexpr double kScaleFloor = 1e-4;
inline constexpr double kCoincidentEps = 1e-9;
inline constexpr double kDetectionThreshold = 0.25;

// y = W x + b, applied to one feature vector.
struct PointwiseLinear {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return weight * x + bias; }
  int in_dims() const { return static_cast<int>(weight.cols()); }
  int out_dims() const { return static_cast<int>(weight.rows()); }

  static PointwiseLinear identity(int n) { return {Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)}; }
  static PointwiseLinear zeros(int out, int in) { return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)}; }
};

// Two-layer head 1962 -> 256 -> 109 with a ReLU in between.
struct OutputHead {
  PointwiseLinear hidden;
  PointwiseLinear output;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    return output(hidden(x).cwiseMax(0.0));
  }

  // Output equals the F_g slice of the input: relu(x) - relu(-x) = x.
  static OutputHead pass_through();
};

// Point-wise heads shared by both hands.
struct AggregationHeads {
  PointwiseLinear f_g = PointwiseLinear::identity(kParamDims);
  PointwiseLinear f_c = PointwiseLinear::identity(kParamDims);
  OutputHead f_out = OutputHead::pass_through();
};

struct InteractionConfig {
  double alpha = 0.5;                   // repulsion intensity, (0, 1]
  double gamma = 2.0;                   // field sensitivity, >= 1
  std::optional<double> lambda_clamp;   // cap on lambda; none = formula as is

  // Throws InvalidArgument when out of range.
  void validate() const;
};

struct CenterPair {
  Vec2 left;
  Vec2 right;
};

// Pushes two colliding centers apart along their connecting line. Centers at
// least k_L + k_R + 1 apart are returned unchanged.
CenterPair collision_aware_repulsion(const Vec2& left, const Vec2& right, double kernel_left,
                                     double kernel_right, double alpha);

// Interaction field radius gamma * (k_L + k_R + 1).
double interaction_field(double kernel_left, double kernel_right, double gamma);

// lambda = (IF - d) / d * |C_L - C_R|_1 inside the field, 0 outside.
double interaction_intensity(const Vec2& left, const Vec2& right, double kernel_left, double kernel_right,
                             double gamma);

// Zero when either hand is absent; applies the optional clamp.
double interaction_intensity(const std::optional<Vec2>& left, const std::optional<Vec2>& right,
                             double kernel_left, double kernel_right, const InteractionConfig& cfg);

// Center-attention pooling of one hand's parameter map, then f_g.
Eigen::VectorXd global_feature(const FeatureMap& center_logits, const FeatureMap& param_map,
                               const PointwiseLinear& f_g);

// Per-part spatial-softmax pooling; row j is the feature of part j (16 x 109).
Eigen::MatrixXd part_feature(const FeatureMap& part_logits, const FeatureMap& param_map);

// Pooling of this hand's cross-hand map with the opposite hand's center
// attention, then f_c.
Eigen::VectorXd cross_hand_feature(const FeatureMap& opposite_center_logits, const FeatureMap& cross_map,
                                   const PointwiseLinear& f_c);

// f_out(concat(F_g, flatten(F_p), lambda * F_c)).
Eigen::VectorXd aggregate_output(const Eigen::VectorXd& global, const Eigen::MatrixXd& parts,
                                 const Eigen::VectorXd& cross, double lambda, const OutputHead& f_out);

double positive_scale(double raw);
double positive_scale_inverse(double scale);

// 0..95 pose (row-major), 96..105 shape, 106 raw scale, 107 tx, 108 ty.
HandParams decode_param_vector(const Eigen::VectorXd& values, Handedness side);
ParamVector encode_param_vector(const HandParams& params);

struct HandDetection {
  bool present = false;
  Vec2 center = Vec2::Zero();
  double kernel = 0.0;
  double peak = 0.0;
};

// Argmax of a center heatmap; the kernel is read off the Gaussian falloff
// towards the 4-neighbours of the peak.
HandDetection detect_hand(const FeatureMap& center_map, double threshold = kDetectionThreshold);

struct HandAggregate {
  HandDetection detection;
  Vec2 repulsed_center = Vec2::Zero();
  Eigen::VectorXd global;
  Eigen::MatrixXd parts;
  Eigen::VectorXd cross;
  Eigen::VectorXd output;
  std::optional<HandParams> params;  // only for detected hands
};

struct AggregationResult {
  double lambda = 0.0;
  std::array<HandAggregate, 2> hands;

  const HandAggregate& operator[](Handedness h) const { return hands[index_of(h)]; }
};

// Detection -> repulsion -> lambda -> three extractions -> f_out -> decode.
AggregationResult run_aggregation(const MapStack& maps, const AggregationHeads& heads,
                                  const InteractionConfig& cfg);

}  // namespace acr
