#pragma once

#include <array>
#include <vector>

#include "segloc/geom/types.hpp"

namespace segloc::geom {

struct HullFace {
  std::array<int, 3> v;  // counter-clockwise seen from outside
  Point3 normal;         // unit, outward
  double offset = 0.0;   // normal . x == offset on the plane
};

struct ConvexHull {
  std::vector<Point3> vertices;
  std::vector<HullFace> faces;
  /// Set for coplanar, collinear or too-small inputs; the hull is then empty.
  bool degenerate = true;

  /// True when `p` lies inside or within `tol` of the boundary.
  bool contains(const Point3& p, double tol = 1e-9) const;
  Aabb bounds() const;
};

/// Incremental 3D hull. Coplanarity tolerance scales with the input extent.
ConvexHull convex_hull(const PointCloud& points, double tolerance = 1e-9);

/// Volume by signed tetrahedra fanned from the vertex centroid; 0 for a degenerate hull.
double hull_volume(const ConvexHull& hull);

}  // namespace segloc::geom
