#include "acr/fitting.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "acr/alignment.hpp"
#include "acr/errors.hpp"

namespace acr {

void FitConfig::validate() const {
  if (max_iters < 0) throw InvalidArgument("max_iters must be nonnegative");
  if (!(step > 0.0) || !(fd_step > 0.0) || !(tolerance > 0.0) || !(loss_floor >= 0.0)) {
    throw InvalidArgument("fit step sizes and tolerances must be positive");
  }
  if (max_halvings < 0) throw InvalidArgument("max_halvings must be nonnegative");
  if (!(damping >= 0.0)) throw InvalidArgument("damping must be nonnegative");
  if (jobs < 1) throw InvalidArgument("jobs must be at least 1");
  weights.validate();
}

HandMetrics hand_metrics(const HandModel& model, const HandParams& pred, const HandParams& gt) {
  const Mesh pred_mesh = model.skin_mesh(pred);
  const Mesh gt_mesh = model.skin_mesh(gt);
  const Joints3 pred_joints = model.regress_joints(pred_mesh);
  const Joints3 gt_joints = model.regress_joints(gt_mesh);

  HandMetrics m;
  const JointErrors joints = joint_errors(pred_joints, gt_joints);
  m.mpjpe_mm = joints.mpjpe_mm;
  m.pa_mpjpe_mm = joints.pa_mpjpe_mm;
  const Mesh pred_rel = pred_mesh.rowwise() - pred_joints.row(0);
  const Mesh gt_rel = gt_mesh.rowwise() - gt_joints.row(0);
  m.mpvpe_mm = 1000.0 * mean_point_error(pred_rel, gt_rel);
  m.pa_mpvpe_mm = 1000.0 * mean_point_error(procrustes_align(pred_mesh, gt_mesh), gt_mesh);
  return m;
}

namespace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct FitHand {
  Handedness side;
  const HandModel* model;
  HandSupervision supervision;
};

HandParams unpack(const Vector& x, int slot, Handedness side) {
  return HandParams::unflatten(x.segment<kParamDims>(slot * kParamDims), side);
}

constexpr double kNormFloor = 1e-12;

// Quantities held fixed while one hand's residuals are differentiated: the
// Procrustes solve and the weights of the quadratic majorizer
// |r| <= |r0| / 2 + |r|^2 / (2 |r0|) of each per-joint norm.
struct Linearization {
  std::optional<Similarity> alignment;
  std::array<double, kNumJoints> mpjpe_weight{};
  std::array<double, kNumJoints> pa_weight{};
};

class Objective {
 public:
  Objective(std::vector<FitHand> hands, const FitConfig& cfg) : hands_(std::move(hands)), cfg_(cfg) {}

  int hand_count() const { return static_cast<int>(hands_.size()); }
  int dims() const { return hand_count() * kParamDims; }

  LossBreakdown breakdown(const Vector& x) const {
    LossBreakdown total;
    for (int slot = 0; slot < hand_count(); ++slot) {
      const LossBreakdown part = hand_breakdown(x, slot);
      for (int t = 0; t < kNumLossTerms; ++t) total.terms[t] += part.terms[t];
    }
    for (double v : total.terms) total.total += v;
    return total;
  }

  double value(const Vector& x) const {
    try {
      return breakdown(x).total;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  // Residuals r and their central-difference Jacobian J for one hand, so
  // that the loss gradient w.r.t. this hand's parameters is 2 J^T r.
  void linearize(const Vector& x, int slot, Vector& r, Matrix& jac) const {
    const Linearization lin = linearization(x, slot);
    r = residuals(x, slot, lin);
    jac.resize(r.size(), kParamDims);
    auto probe = [&](int i) {
      Vector plus = x, minus = x;
      plus(slot * kParamDims + i) += cfg_.fd_step;
      minus(slot * kParamDims + i) -= cfg_.fd_step;
      jac.col(i) = (residuals(plus, slot, lin) - residuals(minus, slot, lin)) / (2.0 * cfg_.fd_step);
    };
    const int jobs = std::min(cfg_.jobs, kParamDims);
    if (jobs <= 1) {
      for (int i = 0; i < kParamDims; ++i) probe(i);
    } else {
      std::vector<std::jthread> workers;
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          for (int i = w; i < kParamDims; i += jobs) probe(i);
        });
      }
    }
  }

 private:
  LossBreakdown hand_breakdown(const Vector& x, int slot) const {
    const FitHand& hand = hands_[static_cast<std::size_t>(slot)];
    HandPrediction pred;
    pred.params = unpack(x, slot, hand.side);
    pred.joints3d = hand.model->posed_joints(pred.params);
    const HandLossInput in{&pred, &hand.supervision, &hand.model->rig().bone_edges};
    return total_loss(std::span(&in, 1), MapLossInput{}, cfg_.weights, cfg_.mask);
  }

  bool active(LossTerm t, bool available) const { return cfg_.mask.has(t) && available; }

  Linearization linearization(const Vector& x, int slot) const {
    const FitHand& hand = hands_[static_cast<std::size_t>(slot)];
    const HandSupervision& sup = hand.supervision;
    Linearization lin;
    if (!sup.joints3d) return lin;
    const Joints3 joints = hand.model->posed_joints(unpack(x, slot, hand.side));
    const Joints3& gt = *sup.joints3d;
    if (active(LossTerm::Mpjpe, true)) {
      for (int j = 1; j < kNumJoints; ++j) {
        const double n = ((joints.row(j) - joints.row(0)) - (gt.row(j) - gt.row(0))).norm();
        lin.mpjpe_weight[j] = cfg_.weights.j3d / (2.0 * kNumJoints * std::max(n, kNormFloor));
      }
    }
    if (active(LossTerm::PaMpjpe, true)) {
      lin.alignment = procrustes_similarity(joints, gt);
      const Points3 aligned = lin.alignment->apply(joints);
      for (int j = 0; j < kNumJoints; ++j) {
        const double n = (aligned.row(j) - gt.row(j)).norm();
        lin.pa_weight[j] = cfg_.weights.paj3d / (2.0 * kNumJoints * std::max(n, kNormFloor));
      }
    }
    return lin;
  }

  Vector residuals(const Vector& x, int slot, const Linearization& lin) const {
    const FitHand& hand = hands_[static_cast<std::size_t>(slot)];
    const HandSupervision& sup = hand.supervision;
    const LossWeights& w = cfg_.weights;
    const HandParams p = unpack(x, slot, hand.side);
    const Joints3 joints = hand.model->posed_joints(p);

    std::vector<double> r;
    r.reserve(320);
    if (active(LossTerm::Mano, sup.params.has_value())) {
      const double sp = std::sqrt(w.pose), ss = std::sqrt(w.shape);
      for (int i = 0; i < kPoseDims; ++i) r.push_back(sp * (p.pose6d.data()[i] - sup.params->pose6d.data()[i]));
      for (int i = 0; i < kNumShape; ++i) r.push_back(ss * (p.shape(i) - sup.params->shape(i)));
    }
    if (active(LossTerm::Mpjpe, sup.joints3d.has_value())) {
      const Joints3& gt = *sup.joints3d;
      for (int j = 1; j < kNumJoints; ++j) {
        const Eigen::RowVector3d d = (joints.row(j) - joints.row(0)) - (gt.row(j) - gt.row(0));
        for (int k = 0; k < 3; ++k) r.push_back(std::sqrt(lin.mpjpe_weight[j]) * d(k));
      }
    }
    if (active(LossTerm::PaMpjpe, sup.joints3d.has_value())) {
      const Similarity align =
          cfg_.freeze_alignment ? *lin.alignment : procrustes_similarity(joints, *sup.joints3d);
      const Points3 aligned = align.apply(joints);
      for (int j = 0; j < kNumJoints; ++j) {
        const Eigen::RowVector3d d = aligned.row(j) - sup.joints3d->row(j);
        for (int k = 0; k < 3; ++k) r.push_back(std::sqrt(lin.pa_weight[j]) * d(k));
      }
    }
    if (active(LossTerm::Pj2d, sup.joints2d.has_value())) {
      const Joints2 d = project_weak_perspective<kNumJoints>(joints, p.camera) - *sup.joints2d;
      for (int i = 0; i < d.size(); ++i) r.push_back(std::sqrt(w.pj2d) * d.data()[i]);
    }
    if (active(LossTerm::Bone, sup.bones.has_value())) {
      const BoneLengths d = bone_lengths(joints, hand.model->rig().bone_edges) - *sup.bones;
      for (int i = 0; i < kNumBones; ++i) r.push_back(std::sqrt(w.bone) * d(i));
    }
    return Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size()));
  }

  std::vector<FitHand> hands_;
  const FitConfig& cfg_;
};

constexpr double kArmijo = 1e-4;

}  // namespace

FitResult fit_scene(const Scene& scene, const HandSlots& init, const HandModelPair& models, const FitConfig& cfg) {
  cfg.validate();
  std::vector<FitHand> hands;
  std::vector<Handedness> sides;
  for (Handedness side : kBothHands) {
    const auto& gt = scene[side];
    if (gt.has_value() != init[index_of(side)].has_value()) {
      throw InvalidArgument("initialization must cover exactly the hands present in the scene");
    }
    if (!gt) continue;
    HandSupervision sup;
    sup.params = gt->params;
    sup.joints3d = gt->joints3d;
    sup.joints2d = gt->joints2d;
    sup.bones = gt->bones;
    hands.push_back({side, &models[side], std::move(sup)});
    sides.push_back(side);
  }
  const Objective objective(std::move(hands), cfg);

  Vector x(objective.dims());
  for (std::size_t slot = 0; slot < sides.size(); ++slot) {
    x.segment<kParamDims>(static_cast<Eigen::Index>(slot) * kParamDims) = init[index_of(sides[slot])]->flatten();
  }

  FitResult result;
  LossBreakdown current;
  try {
    current = objective.breakdown(x);
  } catch (const Error& e) {
    throw InitializationError(std::string("initial loss cannot be evaluated: ") + e.what());
  }
  if (!std::isfinite(current.total)) throw InitializationError("initial loss is not finite");
  result.trace.push_back(current);

  int small_steps = 0;
  result.stop_reason = "iteration limit";
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    if (current.total <= cfg.loss_floor) {
      result.stop_reason = "loss floor";
      break;
    }

    Vector g(x.size()), gauss_newton(x.size());
    try {
      for (int slot = 0; slot < objective.hand_count(); ++slot) {
        Vector r;
        Matrix jac;
        objective.linearize(x, slot, r, jac);
        const Vector jr = jac.transpose() * r;
        Matrix normal = jac.transpose() * jac;
        const double scale = std::max(normal.diagonal().maxCoeff(), 1.0);
        normal.diagonal().array() += cfg.damping * scale;
        g.segment<kParamDims>(slot * kParamDims) = 2.0 * jr;
        gauss_newton.segment<kParamDims>(slot * kParamDims) = -normal.ldlt().solve(jr);
      }
    } catch (const Error&) {
      result.stop_reason = "degenerate linearization";
      break;
    }
    if (!(g.squaredNorm() > 0.0) || !g.allFinite()) {
      result.stop_reason = "zero gradient";
      break;
    }

    const std::array<Vector, 2> directions = {gauss_newton, Vector(-cfg.step * g)};
    bool accepted = false;
    Vector next;
    LossBreakdown next_loss;
    for (const Vector& d : directions) {
      const double slope = g.dot(d);
      if (!d.allFinite() || !(slope < 0.0)) continue;
      double t = 1.0;
      for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
        const Vector trial = x + t * d;
        const double f = objective.value(trial);
        if (std::isfinite(f) && f < current.total && f <= current.total + kArmijo * t * slope) {
          next = trial;
          next_loss = objective.breakdown(trial);
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    if (!accepted) {
      result.stop_reason = "line search failed";
      break;
    }

    const double decrease = current.total - next_loss.total;
    x = next;
    current = next_loss;
    result.trace.push_back(current);
    ++result.iterations;
    if (decrease < cfg.tolerance) {
      if (++small_steps >= 2) {
        result.stop_reason = "converged";
        break;
      }
    } else {
      small_steps = 0;
    }
  }

  for (std::size_t slot = 0; slot < sides.size(); ++slot) {
    const Handedness side = sides[slot];
    const int i = index_of(side);
    result.params[i] = unpack(x, static_cast<int>(slot), side);
    const HandParams& gt = scene[side]->params;
    result.initial_metrics[i] = hand_metrics(models[side], *init[i], gt);
    result.final_metrics[i] = hand_metrics(models[side], *result.params[i], gt);
  }
  return result;
}

std::string trace_csv(const FitResult& result, TermMask mask) {
  std::string out = "iteration,total";
  for (int t = 0; t < kNumLossTerms; ++t) {
    if (mask.has(static_cast<LossTerm>(t))) out += "," + std::string(kLossTermNames[t]);
  }
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    out += std::to_string(i);
    std::snprintf(buf, sizeof buf, ",%.17g", result.trace[i].total);
    out += buf;
    for (int t = 0; t < kNumLossTerms; ++t) {
      if (!mask.has(static_cast<LossTerm>(t))) continue;
      std::snprintf(buf, sizeof buf, ",%.17g", result.trace[i].terms[t]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace acr
