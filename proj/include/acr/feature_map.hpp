#pragma once

#include <Eigen/Core>

#include "acr/types.hpp"

namespace acr {

// Dense C x H x W map stored as a C x (H*W) row-major matrix; pixel (h, w)
// is column h * W + w.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  RowMatrix data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), data(RowMatrix::Zero(c, h * w)) {}

  int pixels() const { return height * width; }
  double& at(int c, int h, int w) { return data(c, h * width + w); }
  double at(int c, int h, int w) const { return data(c, h * width + w); }

  auto channel(int c) { return data.row(c); }
  auto channel(int c) const { return data.row(c); }

  FeatureMap slice(int first, int count) const {
    FeatureMap out(count, height, width);
    out.data = data.middleRows(first, count);
    return out;
  }

  bool operator==(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width && data == o.data;
  }
};

inline constexpr int kMapSize = 64;
inline constexpr int kParamMapChannels = 2 * kParamDims;         // 218
inline constexpr int kCenterMapChannels = 2;
inline constexpr int kPartMapChannels = 1 + 2 * kNumParts;       // 33
inline constexpr int kStackChannels =
    kParamMapChannels + kCenterMapChannels + kPartMapChannels + kParamMapChannels;  // 471

// The four dense outputs. Parameter / cross maps: channels [0,109) left,
// [109,218) right. Center map: 0 left, 1 right. Part map: 0 background,
// 1..16 left parts, 17..32 right parts.
struct MapStack {
  FeatureMap param_map;
  FeatureMap center_map;
  FeatureMap part_map;
  FeatureMap cross_map;

  static MapStack zeros(int height = kMapSize, int width = kMapSize) {
    return {FeatureMap(kParamMapChannels, height, width), FeatureMap(kCenterMapChannels, height, width),
            FeatureMap(kPartMapChannels, height, width), FeatureMap(kParamMapChannels, height, width)};
  }

  int height() const { return center_map.height; }
  int width() const { return center_map.width; }

  FeatureMap params_of(Handedness h) const { return param_map.slice(index_of(h) * kParamDims, kParamDims); }
  FeatureMap cross_of(Handedness h) const { return cross_map.slice(index_of(h) * kParamDims, kParamDims); }
  FeatureMap center_of(Handedness h) const { return center_map.slice(index_of(h), 1); }
  FeatureMap parts_of(Handedness h) const { return part_map.slice(1 + index_of(h) * kNumParts, kNumParts); }
};

}  // namespace acr
