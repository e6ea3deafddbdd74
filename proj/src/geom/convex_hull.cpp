#include "segloc/geom/convex_hull.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace segloc::geom {

namespace {

HullFace make_face(const PointCloud& pts, int a, int b, int c) {
  HullFace f;
  f.v = {a, b, c};
  const Point3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  f.normal = len > 0.0 ? Point3(n / len) : Point3::Zero();
  f.offset = f.normal.dot(pts[a]);
  return f;
}

double signed_distance(const HullFace& f, const Point3& p) { return f.normal.dot(p) - f.offset; }

}  // namespace

bool ConvexHull::contains(const Point3& p, double tol) const {
  if (degenerate) return false;
  for (const auto& f : faces) {
    if (signed_distance(f, p) > tol) return false;
  }
  return true;
}

Aabb ConvexHull::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

ConvexHull convex_hull(const PointCloud& points, double tolerance) {
  ConvexHull hull;
  if (points.size() < 4) return hull;
  const double scale = std::max(1.0, bounding_box(points).extent().maxCoeff());
  const double eps = tolerance * scale;

  // Initial simplex from extreme points.
  int i0 = 0;
  for (int i = 1; i < static_cast<int>(points.size()); ++i) {
    if (points[i].x() < points[i0].x()) i0 = i;
  }
  int i1 = i0;
  double best = 0.0;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const double d = (points[i] - points[i0]).squaredNorm();
    if (d > best) best = d, i1 = i;
  }
  if (std::sqrt(best) <= eps) return hull;
  const Point3 axis = (points[i1] - points[i0]).normalized();
  int i2 = i0;
  best = 0.0;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const double d = (points[i] - points[i0]).cross(axis).norm();
    if (d > best) best = d, i2 = i;
  }
  if (best <= eps) return hull;
  const Point3 plane_n = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  int i3 = i0;
  best = 0.0;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const double d = std::abs(plane_n.dot(points[i] - points[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (best <= eps) return hull;

  std::vector<HullFace> faces;
  const Point3 inner = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
  auto add_oriented = [&](int a, int b, int c) {
    HullFace f = make_face(points, a, b, c);
    if (signed_distance(f, inner) > 0.0) f = make_face(points, a, c, b);
    faces.push_back(f);
  };
  add_oriented(i0, i1, i2);
  add_oriented(i0, i1, i3);
  add_oriented(i0, i2, i3);
  add_oriented(i1, i2, i3);

  std::vector<char> visible;
  std::set<std::pair<int, int>> edges;
  for (int p = 0; p < static_cast<int>(points.size()); ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    visible.assign(faces.size(), 0);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (signed_distance(faces[f], points[p]) > eps) visible[f] = 1, any = true;
    }
    if (!any) continue;
    edges.clear();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) continue;
      const auto& v = faces[f].v;
      edges.insert({v[0], v[1]});
      edges.insert({v[1], v[2]});
      edges.insert({v[2], v[0]});
    }
    std::vector<HullFace> next;
    next.reserve(faces.size() + 8);
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) next.push_back(faces[f]);
    }
    for (const auto& [a, b] : edges) {
      if (!edges.contains({b, a})) next.push_back(make_face(points, a, b, p));
    }
    faces = std::move(next);
  }

  // Compact vertex set.
  std::vector<int> remap(points.size(), -1);
  for (auto& f : faces) {
    for (int& v : f.v) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(hull.vertices.size());
        hull.vertices.push_back(points[v]);
      }
      v = remap[v];
    }
  }
  hull.faces = std::move(faces);
  hull.degenerate = false;
  return hull;
}

double hull_volume(const ConvexHull& hull) {
  if (hull.degenerate || hull.vertices.empty()) return 0.0;
  const Point3 c = centroid(hull.vertices);
  double volume = 0.0;
  for (const auto& f : hull.faces) {
    const Point3 a = hull.vertices[f.v[0]] - c;
    const Point3 b = hull.vertices[f.v[1]] - c;
    const Point3 d = hull.vertices[f.v[2]] - c;
    volume += a.dot(b.cross(d)) / 6.0;
  }
  return std::max(volume, 0.0);
}

}  // namespace segloc::geom
