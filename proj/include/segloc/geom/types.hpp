#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace segloc::geom {

using Point3 = Eigen::Vector3d;
using PointCloud = std::vector<Point3>;

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

inline Point3 centroid(const PointCloud& points) {
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Point3(sum / static_cast<double>(points.size()));
}

struct Aabb {
  Point3 min = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 max = Point3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Point3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool empty() const { return min.x() > max.x(); }
  Point3 extent() const { return empty() ? Point3::Zero() : Point3(max - min); }
  // Euclidean distance from q to the closest point of the box (0 inside).
  double distance_to(const Point3& q) const {
    const Point3 d = (min - q).cwiseMax(q - max).cwiseMax(Point3::Zero());
    return d.norm();
  }
};

inline Aabb bounding_box(const PointCloud& points) {
  Aabb box;
  for (const auto& p : points) box.extend(p);
  return box;
}

}  // namespace segloc::geom
