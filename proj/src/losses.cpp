#include "acr/losses.hpp"

#include <cmath>

#include "acr/alignment.hpp"
#include "acr/errors.hpp"
#include "acr/hand_model.hpp"

namespace acr {

void LossWeights::validate() const {
  for (double w : {j3d, paj3d, pj2d, bone, pose, shape, center, part}) {
    if (!(w >= 0.0)) throw InvalidArgument("loss weights must be nonnegative");
  }
}

double focal_center_loss(const FeatureMap& pred, const FeatureMap& gt, const FocalConfig& cfg) {
  if (pred.channels != gt.channels || pred.height != gt.height || pred.width != gt.width) {
    throw InvalidArgument("focal loss: prediction and target shapes differ");
  }
  double positive = 0.0;
  double negative = 0.0;
  int peaks = 0;
  for (Eigen::Index i = 0; i < pred.data.size(); ++i) {
    const double p = pred.data.data()[i];
    const double y = gt.data.data()[i];
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("focal loss: predictions must lie in (0, 1)");
    if (y >= 1.0) {
      positive -= std::pow(1.0 - p, cfg.alpha) * std::log(p);
      ++peaks;
    } else {
      negative -= std::pow(1.0 - y, cfg.beta) * std::pow(p, cfg.alpha) * std::log1p(-p);
    }
  }
  return (positive + negative) / std::max(peaks, 1);
}

double part_seg_loss(const FeatureMap& logits, const Eigen::MatrixXi& labels) {
  if (labels.rows() != logits.height || labels.cols() != logits.width) {
    throw InvalidArgument("segmentation loss: label map size differs from logits");
  }
  double sum = 0.0;
  for (int h = 0; h < logits.height; ++h) {
    for (int w = 0; w < logits.width; ++w) {
      const int label = labels(h, w);
      if (label < 0 || label >= logits.channels) throw InvalidLabel("segmentation label out of range");
      const auto column = logits.data.col(h * logits.width + w);
      const double peak = column.maxCoeff();
      const double log_sum = peak + std::log((column.array() - peak).exp().sum());
      sum += log_sum - column(label);
    }
  }
  return sum / static_cast<double>(logits.pixels());
}

double mano_param_loss(const HandParams& pred, const HandParams& gt, const LossWeights& w) {
  return w.pose * (pred.pose6d - gt.pose6d).squaredNorm() + w.shape * (pred.shape - gt.shape).squaredNorm();
}

ManoGradient mano_param_loss_gradient(const HandParams& pred, const HandParams& gt, const LossWeights& w) {
  return {2.0 * w.pose * (pred.pose6d - gt.pose6d), 2.0 * w.shape * (pred.shape - gt.shape)};
}

namespace {

Joints3 root_relative(const Joints3& j) {
  Joints3 out = j;
  out.rowwise() -= j.row(0);
  return out;
}

}  // namespace

double root_aligned_mpjpe(const Joints3& pred, const Joints3& gt) {
  return (root_relative(pred) - root_relative(gt)).rowwise().norm().mean();
}

Joints3 root_aligned_mpjpe_gradient(const Joints3& pred, const Joints3& gt) {
  const Joints3 residual = root_relative(pred) - root_relative(gt);
  Joints3 grad = Joints3::Zero();
  for (int i = 1; i < kNumJoints; ++i) {
    const double n = residual.row(i).norm();
    if (n == 0.0) continue;
    const Eigen::RowVector3d g = residual.row(i) / (n * kNumJoints);
    grad.row(i) += g;
    grad.row(0) -= g;
  }
  return grad;
}

double pa_mpjpe(const Joints3& pred, const Joints3& gt) {
  const Points3 p = pred;
  const Points3 g = gt;
  return mean_point_error(procrustes_align(p, g), g);
}

JointErrors joint_errors(const Joints3& pred, const Joints3& gt) {
  return {1000.0 * root_aligned_mpjpe(pred, gt), 1000.0 * pa_mpjpe(pred, gt)};
}

double pj2d_loss(const Joints3& pred3d, const WeakCamera& camera, const Joints2& gt2d, double w_pj2d) {
  return w_pj2d * (project_weak_perspective<kNumJoints>(pred3d, camera) - gt2d).squaredNorm();
}

Pj2dGradient pj2d_loss_gradient(const Joints3& pred3d, const WeakCamera& camera, const Joints2& gt2d,
                                double w_pj2d) {
  const Joints2 r = project_weak_perspective<kNumJoints>(pred3d, camera) - gt2d;
  Pj2dGradient g;
  g.joints.setZero();
  g.joints.leftCols<2>() = 2.0 * w_pj2d * camera.s * r;
  g.camera.s = 2.0 * w_pj2d * (r.col(0).dot(pred3d.col(0)) + r.col(1).dot(pred3d.col(1)));
  g.camera.tx = 2.0 * w_pj2d * r.col(0).sum();
  g.camera.ty = 2.0 * w_pj2d * r.col(1).sum();
  return g;
}

double bone_loss(const BoneLengths& pred, const BoneLengths& gt) { return (pred - gt).squaredNorm(); }

Joints3 bone_loss_gradient(const Joints3& joints, const BoneLengths& gt,
                           const std::array<BoneEdge, kNumBones>& edges) {
  Joints3 grad = Joints3::Zero();
  for (int e = 0; e < kNumBones; ++e) {
    const auto [a, b] = edges[e];
    const Eigen::RowVector3d v = joints.row(b) - joints.row(a);
    const double len = v.norm();
    if (len == 0.0) continue;
    const Eigen::RowVector3d g = 2.0 * (len - gt(e)) / len * v;
    grad.row(b) += g;
    grad.row(a) -= g;
  }
  return grad;
}

TermMask TermMask::mesh_terms() {
  return none()
      .with(LossTerm::Mano)
      .with(LossTerm::Mpjpe)
      .with(LossTerm::PaMpjpe)
      .with(LossTerm::Pj2d)
      .with(LossTerm::Bone);
}

TermMask TermMask::parse(const std::vector<std::string>& names) {
  TermMask mask = none();
  for (const std::string& name : names) {
    bool found = false;
    for (int t = 0; t < kNumLossTerms; ++t) {
      if (kLossTermNames[t] == name) {
        mask = mask.with(static_cast<LossTerm>(t));
        found = true;
      }
    }
    if (!found) throw InvalidArgument("unknown loss term '" + name + "'");
  }
  return mask;
}

LossBreakdown total_loss(std::span<const HandLossInput> hands, const MapLossInput& maps, const LossWeights& w,
                         TermMask mask, const FocalConfig& focal) {
  LossBreakdown out;
  auto add = [&](LossTerm t, double v) { out.terms[static_cast<std::size_t>(t)] += v; };

  for (const HandLossInput& hand : hands) {
    const HandPrediction& pred = *hand.pred;
    const HandSupervision& gt = *hand.gt;
    if (mask.has(LossTerm::Mano) && gt.params) add(LossTerm::Mano, mano_param_loss(pred.params, *gt.params, w));
    if (mask.has(LossTerm::Mpjpe) && gt.joints3d) {
      add(LossTerm::Mpjpe, w.j3d * root_aligned_mpjpe(pred.joints3d, *gt.joints3d));
    }
    if (mask.has(LossTerm::PaMpjpe) && gt.joints3d) {
      add(LossTerm::PaMpjpe, w.paj3d * pa_mpjpe(pred.joints3d, *gt.joints3d));
    }
    if (mask.has(LossTerm::Pj2d) && gt.joints2d) {
      add(LossTerm::Pj2d, pj2d_loss(pred.joints3d, pred.params.camera, *gt.joints2d, w.pj2d));
    }
    if (mask.has(LossTerm::Bone) && gt.bones && hand.edges) {
      add(LossTerm::Bone, w.bone * bone_loss(bone_lengths(pred.joints3d, *hand.edges), *gt.bones));
    }
  }
  if (mask.has(LossTerm::Center) && maps.center_pred && maps.center_gt) {
    add(LossTerm::Center, w.center * focal_center_loss(*maps.center_pred, *maps.center_gt, focal));
  }
  if (mask.has(LossTerm::Seg) && maps.part_logits && maps.part_labels) {
    add(LossTerm::Seg, w.part * part_seg_loss(*maps.part_logits, *maps.part_labels));
  }
  for (double v : out.terms) out.total += v;
  return out;
}

}  // namespace acr
