#include "acr/attention_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace acr {

std::optional<Vec2> compute_center(const Joints2& joints2d, const std::array<int, 5>& mcp_indices,
                                   const std::array<bool, kNumJoints>& visible) {
  Vec2 sum = Vec2::Zero();
  int count = 0;
  for (int j : mcp_indices) {
    if (!visible[j]) continue;
    sum += joints2d.row(j).transpose();
    ++count;
  }
  if (count == 0) return std::nullopt;
  return Vec2(sum / count);
}

int kernel_from_bbox(double bbox_w, double bbox_h, const KernelConfig& cfg) {
  const double k = std::round(cfg.scale * std::max(bbox_w, bbox_h));
  return static_cast<int>(std::clamp(k, static_cast<double>(cfg.min_kernel), static_cast<double>(cfg.max_kernel)));
}

FeatureMap render_center_map(const CenterSpec& spec, int height, int width) {
  FeatureMap out(1, height, width);
  if (!spec.center) return out;
  const double cx = std::clamp(std::round(spec.center->x()), 0.0, static_cast<double>(width - 1));
  const double cy = std::clamp(std::round(spec.center->y()), 0.0, static_cast<double>(height - 1));
  const double denom = 2.0 * spec.kernel * spec.kernel;
  for (int h = 0; h < height; ++h) {
    for (int w = 0; w < width; ++w) {
      const double d2 = (w - cx) * (w - cx) + (h - cy) * (h - cy);
      out.at(0, h, w) = std::exp(-d2 / denom);
    }
  }
  return out;
}

Eigen::RowVectorXd spatial_softmax(const Eigen::Ref<const Eigen::RowVectorXd>& logits) {
  const double peak = logits.maxCoeff();
  Eigen::RowVectorXd e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd channel_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

PartSegmentation render_part_segmentation(std::span<const SplatSource> hands, int height, int width) {
  Eigen::MatrixXi labels = Eigen::MatrixXi::Zero(height, width);
  Eigen::MatrixXd depth = Eigen::MatrixXd::Constant(height, width, std::numeric_limits<double>::infinity());
  for (const SplatSource& hand : hands) {
    const Mesh& verts = *hand.vertices;
    const int offset = 1 + index_of(hand.side) * kNumParts;
    for (Eigen::Index v = 0; v < verts.rows(); ++v) {
      const double x = hand.camera.s * verts(v, 0) + hand.camera.tx;
      const double y = hand.camera.s * verts(v, 1) + hand.camera.ty;
      const double z = verts(v, 2);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      const long px = std::lround(x);
      const long py = std::lround(y);
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long qx = px + dx;
          const long qy = py + dy;
          if (qx < 0 || qy < 0 || qx >= width || qy >= height) continue;
          if (z < depth(qy, qx)) {
            depth(qy, qx) = z;
            labels(qy, qx) = offset + (*hand.vertex_part)[static_cast<std::size_t>(v)];
          }
        }
      }
    }
  }
  return {one_hot_labels(labels), std::move(labels)};
}

FeatureMap one_hot_labels(const Eigen::MatrixXi& labels, int classes) {
  FeatureMap out(classes, static_cast<int>(labels.rows()), static_cast<int>(labels.cols()));
  for (int h = 0; h < out.height; ++h) {
    for (int w = 0; w < out.width; ++w) out.at(labels(h, w), h, w) = 1.0;
  }
  return out;
}

FeatureMap append_coord_channels(const FeatureMap& feature) {
  FeatureMap out(feature.channels + 2, feature.height, feature.width);
  out.data.topRows(feature.channels) = feature.data;
  auto normalized = [](int i, int n) { return n > 1 ? -1.0 + 2.0 * i / (n - 1) : 0.0; };
  for (int h = 0; h < feature.height; ++h) {
    for (int w = 0; w < feature.width; ++w) {
      out.at(feature.channels, h, w) = normalized(w, feature.width);
      out.at(feature.channels + 1, h, w) = normalized(h, feature.height);
    }
  }
  return out;
}

}  // namespace acr
