#pragma once

// Pixel-loop reference implementations used as oracles by the unit and
// acceptance tests. Deliberately written without Eigen expressions.

#include <cmath>
#include <vector>

#include "acr/aggregation.hpp"
#include "acr/feature_map.hpp"

namespace acr::oracle {

inline std::vector<double> softmax_pixels(const FeatureMap& m, int c) {
  double peak = -INFINITY;
  for (int h = 0; h < m.height; ++h)
    for (int w = 0; w < m.width; ++w) peak = std::max(peak, m.at(c, h, w));
  std::vector<double> out(static_cast<std::size_t>(m.height * m.width));
  double total = 0.0;
  for (int h = 0; h < m.height; ++h) {
    for (int w = 0; w < m.width; ++w) {
      const double e = std::exp(m.at(c, h, w) - peak);
      out[static_cast<std::size_t>(h * m.width + w)] = e;
      total += e;
    }
  }
  for (double& v : out) v /= total;
  return out;
}

inline std::vector<double> linear_loop(const PointwiseLinear& f, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(f.weight.rows()));
  for (Eigen::Index r = 0; r < f.weight.rows(); ++r) {
    double acc = f.bias(r);
    for (Eigen::Index c = 0; c < f.weight.cols(); ++c) acc += f.weight(r, c) * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

// sum_{h,w} softmax(attention)(h,w) * features(:,h,w), then f.
inline std::vector<double> pooled(const FeatureMap& attention, const FeatureMap& features,
                                  const PointwiseLinear& f) {
  const auto weights = softmax_pixels(attention, 0);
  std::vector<double> acc(static_cast<std::size_t>(features.channels), 0.0);
  for (int c = 0; c < features.channels; ++c) {
    for (int h = 0; h < features.height; ++h) {
      for (int w = 0; w < features.width; ++w) {
        acc[static_cast<std::size_t>(c)] += weights[static_cast<std::size_t>(h * features.width + w)] * features.at(c, h, w);
      }
    }
  }
  return linear_loop(f, acc);
}

inline std::vector<std::vector<double>> parts(const FeatureMap& part_logits, const FeatureMap& features) {
  std::vector<std::vector<double>> out;
  for (int j = 0; j < part_logits.channels; ++j) {
    const auto weights = softmax_pixels(part_logits, j);
    std::vector<double> row(static_cast<std::size_t>(features.channels), 0.0);
    for (int c = 0; c < features.channels; ++c) {
      for (int h = 0; h < features.height; ++h) {
        for (int w = 0; w < features.width; ++w) {
          row[static_cast<std::size_t>(c)] += weights[static_cast<std::size_t>(h * features.width + w)] * features.at(c, h, w);
        }
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> output_head(const OutputHead& head, const std::vector<double>& input) {
  auto hidden = linear_loop(head.hidden, input);
  for (double& v : hidden) v = v > 0.0 ? v : 0.0;
  return linear_loop(head.output, hidden);
}

}  // namespace acr::oracle
