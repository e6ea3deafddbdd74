#include "segloc/geom/rigid_fit.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace segloc::geom {

std::optional<RigidTransform> estimate_rigid_transform(const PointCloud& source, const PointCloud& target) {
  if (source.size() != target.size()) throw std::invalid_argument("estimate_rigid_transform: size mismatch");
  if (source.size() < 3) throw std::invalid_argument("estimate_rigid_transform: need at least 3 pairs");

  const Point3 cs = centroid(source);
  const Point3 ct = centroid(target);
  Eigen::Matrix3d cross_cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d source_cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Point3 a = source[i] - cs;
    cross_cov += a * (target[i] - ct).transpose();
    source_cov += a * a.transpose();
  }
  // Collinear sources leave the rotation about the line undetermined.
  Eigen::JacobiSVD<Eigen::Matrix3d> spread(source_cov);
  const Eigen::Vector3d sv = spread.singularValues();
  if (sv(0) <= 0.0 || sv(1) <= 1e-12 * std::max(1.0, sv(0))) return std::nullopt;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross_cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = orthonormalize(svd.matrixV() * d * svd.matrixU().transpose());
  return RigidTransform(r, ct - r * cs);
}

std::optional<RigidTransform> estimate_yaw_transform(const PointCloud& source, const PointCloud& target) {
  if (source.size() != target.size()) throw std::invalid_argument("estimate_yaw_transform: size mismatch");
  if (source.size() < 3) throw std::invalid_argument("estimate_yaw_transform: need at least 3 pairs");

  const Point3 cs = centroid(source);
  const Point3 ct = centroid(target);
  double dot = 0.0, cross = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Point3 a = source[i] - cs, b = target[i] - ct;
    dot += a.x() * b.x() + a.y() * b.y();
    cross += a.x() * b.y() - a.y() * b.x();
    spread += a.x() * a.x() + a.y() * a.y();
  }
  if (spread <= 1e-12) return std::nullopt;
  const RigidTransform rot = RigidTransform::from_yaw(std::atan2(cross, dot));
  return RigidTransform(rot.rotation(), ct - rot.rotation() * cs);
}

double rms_residual(const RigidTransform& t, const PointCloud& source, const PointCloud& target) {
  if (source.empty() || source.size() != target.size()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) sum += (t.apply(source[i]) - target[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(source.size()));
}

}  // namespace segloc::geom
