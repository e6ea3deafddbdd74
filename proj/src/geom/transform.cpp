#include "segloc/geom/transform.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace segloc::geom {

namespace {
constexpr double kSmallAngle = 1e-10;
}

bool is_rotation(const Eigen::Matrix3d& m, double tol) {
  if (!m.allFinite()) return false;
  const Eigen::Matrix3d gram = m.transpose() * m;
  return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) throw std::invalid_argument("RigidTransform: rotation is not in SO(3)");
  if (!translation_.allFinite()) throw std::invalid_argument("RigidTransform: non-finite translation");
}

RigidTransform RigidTransform::from_yaw(double yaw, const Point3& translation) {
  return {Eigen::AngleAxisd(yaw, Point3::UnitZ()).toRotationMatrix(), translation};
}

RigidTransform RigidTransform::from_axis_angle(const Point3& axis_angle, const Point3& translation) {
  return {so3_exp(axis_angle), translation};
}

double RigidTransform::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

PointCloud RigidTransform::apply(const PointCloud& cloud) const {
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(apply(p));
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

Eigen::Matrix3d skew(const Point3& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Matrix3d so3_exp(const Point3& w) {
  const double theta = w.norm();
  if (theta < kSmallAngle) return orthonormalize(Eigen::Matrix3d::Identity() + skew(w));
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Point3 so3_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

RigidTransform se3_exp(const Vector6d& xi) {
  const Point3 u = xi.head<3>();
  const Point3 w = xi.tail<3>();
  const double theta = w.norm();
  const Eigen::Matrix3d r = so3_exp(w);
  if (theta < kSmallAngle) return {r, u};
  const Eigen::Matrix3d wx = skew(w);
  const double t2 = theta * theta;
  const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + (1.0 - std::cos(theta)) / t2 * wx +
                            (theta - std::sin(theta)) / (t2 * theta) * wx * wx;
  return {r, v * u};
}

Vector6d se3_log(const RigidTransform& t) {
  const Point3 w = so3_log(t.rotation());
  const double theta = w.norm();
  Vector6d xi;
  xi.tail<3>() = w;
  if (theta < kSmallAngle) {
    xi.head<3>() = t.translation();
    return xi;
  }
  const Eigen::Matrix3d wx = skew(w);
  const double half = 0.5 * theta;
  const double coeff = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  const Eigen::Matrix3d v_inv = Eigen::Matrix3d::Identity() - 0.5 * wx + coeff * wx * wx;
  xi.head<3>() = v_inv * t.translation();
  return xi;
}

}  // namespace segloc::geom
