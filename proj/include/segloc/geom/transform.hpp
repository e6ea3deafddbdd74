#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "segloc/geom/types.hpp"

namespace segloc::geom {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Proper rigid motion x -> R x + t.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Point3::Zero()) {}
  /// Throws std::invalid_argument if `rotation` is not orthonormal with det +1 (1e-9).
  RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_yaw(double yaw, const Point3& translation = Point3::Zero());
  static RigidTransform from_axis_angle(const Point3& axis_angle, const Point3& translation);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }
  double yaw() const;

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  PointCloud apply(const PointCloud& cloud) const;

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;

 private:
  Eigen::Matrix3d rotation_;
  Point3 translation_;
};

bool is_rotation(const Eigen::Matrix3d& m, double tol = 1e-9);

/// Nearest rotation in Frobenius norm (SVD projection).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

Eigen::Matrix3d skew(const Point3& v);
Eigen::Matrix3d so3_exp(const Point3& w);
Point3 so3_log(const Eigen::Matrix3d& r);

/// Tangent ordering is [translation part u, rotation part w].
RigidTransform se3_exp(const Vector6d& xi);
Vector6d se3_log(const RigidTransform& t);

}  // namespace segloc::geom
