#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <unsupported/Eigen/AutoDiff>

#include "acr/errors.hpp"
#include "acr/types.hpp"

namespace acr {

inline constexpr double kDegenerateRotationEps = 1e-8;

inline double value_of(double x) { return x; }
template <typename Derivative>
double value_of(const Eigen::AutoDiffScalar<Derivative>& x) {
  return x.value();
}

// Decodes a continuous 6D rotation (two stacked 3-vectors, the first two
// columns of the target matrix) into SO(3) by Gram-Schmidt.
template <typename T>
Eigen::Matrix<T, 3, 3> rot6d_to_matrix(const Eigen::Matrix<T, 6, 1>& r) {
  using std::sqrt;
  const Eigen::Matrix<T, 3, 1> a1 = r.template head<3>();
  const Eigen::Matrix<T, 3, 1> a2 = r.template tail<3>();
  const T n1 = sqrt(a1.squaredNorm());
  const T n2 = sqrt(a2.squaredNorm());
  if (!(value_of(n1) > kDegenerateRotationEps) || !(value_of(n2) > kDegenerateRotationEps)) {
    throw DegenerateRotation("6D rotation has a near-zero column");
  }
  const Eigen::Matrix<T, 3, 1> b1 = a1 / n1;
  const Eigen::Matrix<T, 3, 1> u2 = a2 - b1.dot(a2) * b1;
  const T n_u2 = sqrt(u2.squaredNorm());
  if (!(value_of(n_u2) > kDegenerateRotationEps * value_of(n2))) {
    throw DegenerateRotation("6D rotation columns are parallel");
  }
  const Eigen::Matrix<T, 3, 1> b2 = u2 / n_u2;
  Eigen::Matrix<T, 3, 3> m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return m;
}

inline Mat3 rot6d_to_matrix(const Eigen::Matrix<double, 6, 1>& r) {
  return rot6d_to_matrix<double>(r);
}

// First two columns of a rotation matrix.
inline Eigen::Matrix<double, 6, 1> matrix_to_rot6d(const Mat3& m) {
  Eigen::Matrix<double, 6, 1> r;
  r << m.col(0), m.col(1);
  return r;
}

inline Mat3 axis_angle_to_matrix(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace acr
