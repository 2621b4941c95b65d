#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "acr/feature_map.hpp"
#include "acr/hand_rig.hpp"
#include "acr/types.hpp"

namespace acr {

struct LossWeights {
  double j3d = 200.0;
  double paj3d = 360.0;
  double pj2d = 400.0;
  double bone = 200.0;
  double pose = 80.0;
  double shape = 10.0;
  double center = 80.0;
  double part = 160.0;

  void validate() const;
};

// Penalty-reduced focal loss exponents.
struct FocalConfig {
  double alpha = 2.0;
  double beta = 4.0;
};

// Focal loss over every channel of a center heatmap; `pred` must lie in
// (0, 1). Pixels where gt == 1 are positives. Normalized by the positive
// count (at least 1).
double focal_center_loss(const FeatureMap& pred, const FeatureMap& gt, const FocalConfig& cfg = {});

// Mean per-pixel cross-entropy of channel-softmaxed logits against labels.
double part_seg_loss(const FeatureMap& logits, const Eigen::MatrixXi& labels);

double mano_param_loss(const HandParams& pred, const HandParams& gt, const LossWeights& w);

struct ManoGradient {
  Pose6d pose;
  ShapeCoeffs shape;
};
ManoGradient mano_param_loss_gradient(const HandParams& pred, const HandParams& gt, const LossWeights& w);

// Mean joint distance after subtracting each set's root (joint 0). Units
// follow the inputs.
double root_aligned_mpjpe(const Joints3& pred, const Joints3& gt);
Joints3 root_aligned_mpjpe_gradient(const Joints3& pred, const Joints3& gt);

// Mean joint distance after Procrustes alignment of pred onto gt.
double pa_mpjpe(const Joints3& pred, const Joints3& gt);

struct JointErrors {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
};

// Metric errors in millimeters for joints given in meters.
JointErrors joint_errors(const Joints3& pred, const Joints3& gt);

// w_pj2d * sum of squared 2D residuals of the weak-perspective projection.
double pj2d_loss(const Joints3& pred3d, const WeakCamera& camera, const Joints2& gt2d, double w_pj2d);

struct Pj2dGradient {
  Joints3 joints;
  WeakCamera camera;  // d/ds, d/dtx, d/dty
};
Pj2dGradient pj2d_loss_gradient(const Joints3& pred3d, const WeakCamera& camera, const Joints2& gt2d,
                                double w_pj2d);

// Sum of squared bone length differences.
double bone_loss(const BoneLengths& pred, const BoneLengths& gt);
// Gradient of bone_loss(bone_lengths(joints), gt) w.r.t. the joints.
Joints3 bone_loss_gradient(const Joints3& joints, const BoneLengths& gt,
                           const std::array<BoneEdge, kNumBones>& edges);

enum class LossTerm { Mano = 0, Mpjpe, PaMpjpe, Pj2d, Bone, Center, Seg };
inline constexpr int kNumLossTerms = 7;
inline constexpr std::array<std::string_view, kNumLossTerms> kLossTermNames = {
    "mano", "mpjpe", "pa_mpjpe", "pj2d", "bone", "center", "seg"};

class TermMask {
 public:
  static TermMask all() { return TermMask(std::bitset<kNumLossTerms>().set()); }
  static TermMask none() { return TermMask({}); }
  // Terms that depend on the hand parameters.
  static TermMask mesh_terms();
  static TermMask only(LossTerm t) { return none().with(t); }
  // Comma / list of term names; throws InvalidArgument on unknown names.
  static TermMask parse(const std::vector<std::string>& names);

  TermMask with(LossTerm t, bool on = true) const {
    TermMask m = *this;
    m.bits_.set(static_cast<std::size_t>(t), on);
    return m;
  }
  bool has(LossTerm t) const { return bits_.test(static_cast<std::size_t>(t)); }
  bool operator==(const TermMask&) const = default;

 private:
  explicit TermMask(std::bitset<kNumLossTerms> bits) : bits_(bits) {}
  std::bitset<kNumLossTerms> bits_;
};

struct HandPrediction {
  HandParams params;
  Joints3 joints3d;
};

// Ground truth available for one hand; missing entries switch their terms off.
struct HandSupervision {
  std::optional<HandParams> params;
  std::optional<Joints3> joints3d;
  std::optional<Joints2> joints2d;
  std::optional<BoneLengths> bones;
};

struct HandLossInput {
  const HandPrediction* pred = nullptr;
  const HandSupervision* gt = nullptr;
  const std::array<BoneEdge, kNumBones>* edges = nullptr;
};

struct MapLossInput {
  const FeatureMap* center_pred = nullptr;    // probabilities, 2 x H x W
  const FeatureMap* center_gt = nullptr;
  const FeatureMap* part_logits = nullptr;    // 33 x H x W
  const Eigen::MatrixXi* part_labels = nullptr;
};

struct LossBreakdown {
  std::array<double, kNumLossTerms> terms{};  // weighted contributions
  double total = 0.0;

  double operator[](LossTerm t) const { return terms[static_cast<std::size_t>(t)]; }
};

// L_mesh (L_mano + L_joint) summed over hands, plus w_c L_c + w_p L_seg.
// A term contributes only when it is in `mask` and its ground truth exists.
LossBreakdown total_loss(std::span<const HandLossInput> hands, const MapLossInput& maps, const LossWeights& w,
                         TermMask mask, const FocalConfig& focal = {});

}  // namespace acr
