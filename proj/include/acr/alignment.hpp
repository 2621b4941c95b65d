#pragma once

#include "acr/types.hpp"

namespace acr {

struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Points3 apply(const Points3& points) const;
};

// Closed-form least-squares similarity (Umeyama) taking `pred` onto `gt`,
// with the reflection correction that keeps the rotation proper. Throws
// DegenerateAlignment for fewer than 3 points, a collinear `gt` or a `pred`
// collapsed to a single point.
Similarity procrustes_similarity(const Points3& pred, const Points3& gt);

Points3 procrustes_align(const Points3& pred, const Points3& gt);

// Mean Euclidean distance between corresponding rows.
double mean_point_error(const Points3& a, const Points3& b);

}  // namespace acr
