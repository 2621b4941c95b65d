#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "acr/feature_map.hpp"
#include "acr/types.hpp"

namespace acr {

// Mean of the visible MCP joints, or nothing when none is visible.
std::optional<Vec2> compute_center(const Joints2& joints2d, const std::array<int, 5>& mcp_indices,
                                   const std::array<bool, kNumJoints>& visible);

struct KernelConfig {
  double scale = 0.1;
  int min_kernel = 2;
  int max_kernel = 16;
};

// Gaussian kernel size from the hand's bounding box on the map.
int kernel_from_bbox(double bbox_w, double bbox_h, const KernelConfig& cfg = {});

// Location and kernel of one hand's center heatmap; no center means the hand
// is absent.
struct CenterSpec {
  std::optional<Vec2> center;  // (x = column, y = row), map pixels
  double kernel = 2.0;
};

// exp(-|p - c|^2 / 2k^2) around the center rounded to the nearest pixel
// (clamped into the map); all zeros for an absent hand.
FeatureMap render_center_map(const CenterSpec& spec, int height, int width);

// Softmax over every entry of a row of logits.
Eigen::RowVectorXd spatial_softmax(const Eigen::Ref<const Eigen::RowVectorXd>& logits);

// Softmax over the class axis of one pixel.
Eigen::VectorXd channel_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

// One hand's mesh as seen by the label rasterizer.
struct SplatSource {
  const Mesh* vertices = nullptr;
  const std::vector<int>* vertex_part = nullptr;
  WeakCamera camera;
  Handedness side = Handedness::Right;
};

struct PartSegmentation {
  FeatureMap one_hot;       // 33 x H x W
  Eigen::MatrixXi labels;   // H x W, 0 = background
};

// Depth-buffered point splatting of part labels: each vertex is projected by
// its hand's camera and covers the 3x3 block around its nearest pixel; the
// smallest z wins. Left parts map to labels 1..16, right to 17..32.
PartSegmentation render_part_segmentation(std::span<const SplatSource> hands, int height, int width);

FeatureMap one_hot_labels(const Eigen::MatrixXi& labels, int classes = kPartMapChannels);

// Appends x and y coordinate channels normalized to [-1, 1].
FeatureMap append_coord_channels(const FeatureMap& feature);

}  // namespace acr
