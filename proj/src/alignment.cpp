#include "acr/alignment.hpp"

#include <Eigen/SVD>

#include "acr/errors.hpp"

namespace acr {

Points3 Similarity::apply(const Points3& points) const {
  Points3 out = (scale * points * rotation.transpose());
  out.rowwise() += translation.transpose();
  return out;
}

Similarity procrustes_similarity(const Points3& pred, const Points3& gt) {
  const Eigen::Index n = pred.rows();
  if (n < 3 || gt.rows() != n) throw DegenerateAlignment("alignment needs at least 3 matching points");
  const Eigen::RowVector3d mu_pred = pred.colwise().mean();
  const Eigen::RowVector3d mu_gt = gt.colwise().mean();
  const Points3 p = pred.rowwise() - mu_pred;
  const Points3 g = gt.rowwise() - mu_gt;

  const double var_pred = p.squaredNorm() / static_cast<double>(n);
  if (!(var_pred > 1e-300)) throw DegenerateAlignment("predicted points collapse to a single point");
  const Eigen::JacobiSVD<Eigen::MatrixXd> gt_svd(g);
  const auto gt_sv = gt_svd.singularValues();
  if (!(gt_sv(1) > 1e-9 * gt_sv(0))) throw DegenerateAlignment("target points are collinear");

  const Mat3 cov = g.transpose() * p / static_cast<double>(n);
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 signs = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) signs(2) = -1.0;

  Similarity out;
  out.rotation = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  out.scale = svd.singularValues().dot(signs) / var_pred;
  out.translation = mu_gt.transpose() - out.scale * out.rotation * mu_pred.transpose();
  return out;
}

Points3 procrustes_align(const Points3& pred, const Points3& gt) {
  return procrustes_similarity(pred, gt).apply(pred);
}

double mean_point_error(const Points3& a, const Points3& b) {
  return (a - b).rowwise().norm().mean();
}

}  // namespace acr
