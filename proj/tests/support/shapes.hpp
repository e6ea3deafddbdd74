#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "segloc/geom/transform.hpp"
#include "segloc/segmentation/segmenter.hpp"

namespace segloc::testing {

using geom::Point3;
using geom::PointCloud;
using segmentation::SegmentId;

/// Surface samples of one of `kShapeKinds` object templates: boxes, cylinders,
/// L-prisms and walls of varying size.
inline constexpr int kShapeKinds = 20;

inline Point3 shape_dims(int kind) {
  const double s = 1.0 + 0.45 * (kind / 4);
  switch (kind % 4) {
    case 0: return Point3(1.2 * s, 0.8 * s, 0.9 + 0.2 * s);
    case 1: return Point3(0.3 * s, 0.3 * s, 1.0 + 0.6 * s);
    case 2: return Point3(1.5 * s, 1.0 * s, 1.2);
    default: return Point3(2.0 * s, 0.15, 0.8 + 0.4 * s);
  }
}

inline PointCloud sample_shape(int kind, std::mt19937_64& rng, int n = 1500, double noise = 0.01) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, noise);
  const Point3 d = shape_dims(kind);
  PointCloud pts;
  while (static_cast<int>(pts.size()) < n) {
    Point3 p;
    switch (kind % 4) {
      case 1: {
        const double a = 2.0 * std::numbers::pi * u(rng);
        p = Point3(d.x() * std::cos(a), d.y() * std::sin(a), d.z() * u(rng));
        break;
      }
      case 2: {
        // Two perpendicular slabs sharing a corner.
        if (u(rng) < 0.6)
          p = Point3(d.x() * u(rng), 0.3 * u(rng), d.z() * u(rng));
        else
          p = Point3(0.3 * u(rng), d.y() * u(rng), d.z() * u(rng));
        const int face = static_cast<int>(u(rng) * 3);
        if (face == 0) p.z() = u(rng) < 0.5 ? 0.0 : d.z();
        break;
      }
      default: {
        p = Point3(d.x() * u(rng), d.y() * u(rng), d.z() * u(rng));
        const int face = static_cast<int>(u(rng) * 3);
        p[face] = u(rng) < 0.5 ? 0.0 : d[face];
        break;
      }
    }
    pts.push_back(p + Point3(g(rng), g(rng), g(rng)));
  }
  return pts;
}

/// A partial view: random yaw and translation, then a cut along a random
/// horizontal direction keeping about `keep` of the points.
inline segmentation::SegmentObservation observe_shape(int kind, std::mt19937_64& rng, double keep, SegmentId id,
                                                      std::uint32_t index) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud pts = sample_shape(kind, rng);
  if (keep < 1.0) {
    const double a = 2.0 * std::numbers::pi * u(rng);
    const Point3 dir(std::cos(a), std::sin(a), 0.0);
    std::vector<double> proj;
    for (const auto& p : pts) proj.push_back(p.dot(dir));
    std::vector<double> sorted = proj;
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[static_cast<std::size_t>(keep * (sorted.size() - 1))];
    PointCloud kept;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (proj[i] <= cut) kept.push_back(pts[i]);
    pts = kept;
  }
  const auto pose = geom::RigidTransform::from_yaw(2.0 * std::numbers::pi * u(rng), Point3(50 * u(rng), 50 * u(rng), 0));
  segmentation::SegmentObservation o;
  o.segment_id = id;
  o.index = index;
  o.points = pose.apply(pts);
  o.centroid = geom::centroid(o.points);
  return o;
}

/// One track per shape kind with observations of growing completeness.
inline std::vector<segmentation::SegmentTrack> shape_tracks(int kinds, int observations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<segmentation::SegmentTrack> tracks;
  for (int k = 0; k < kinds; ++k) {
    segmentation::SegmentTrack t;
    t.id = static_cast<SegmentId>(k);
    for (int o = 0; o < observations; ++o)
      t.observations.push_back(observe_shape(k, rng, 0.6 + 0.4 * (o + 1) / observations, t.id, o));
    t.complete = true;
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace segloc::testing
