#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "segloc/descriptors/descriptor.hpp"
#include "segloc/geom/transform.hpp"

namespace segloc::pipeline {

using descriptors::SemanticClass;
using geom::Point3;
using geom::PointCloud;
using geom::RigidTransform;

enum class ShapeKind { box, cylinder, l_prism, wall };

/// Objects stand on the ground plane z = 0.
/// box / wall: size = (length, width, height), centred on (x, y).
/// cylinder: size.x() is the diameter.
/// l_prism: a bar of size.x() along the local x axis and an arm of size.y() along
/// local y, both `thickness` wide, meeting at the origin corner.
struct WorldObject {
  std::uint32_t id = 0;  // 0 is reserved for the ground
  ShapeKind kind = ShapeKind::box;
  int template_index = 0;
  double x = 0.0, y = 0.0, yaw = 0.0;
  Point3 size = Point3::Ones();
  double thickness = 0.5;
  SemanticClass label = SemanticClass::other;

  double footprint_radius() const;
};

struct WorldParams {
  double extent = 120.0;  // side of the square world centred on the origin
  std::size_t object_count = 70;
  double road_radius = 40.0;
  double road_half_width = 3.5;
  double max_offset = 11.0;  // objects within this distance of the road centre line
  double min_gap = 1.0;
};

struct SyntheticWorld {
  std::uint64_t seed = 0;
  WorldParams params;
  std::vector<WorldObject> objects;

  const WorldObject* find(std::uint32_t id) const;
};

inline constexpr int kObjectTemplates = 20;

/// Deterministic under `seed`. Throws std::invalid_argument on a non-positive
/// extent or a road that does not fit.
SyntheticWorld generate_world(std::uint64_t seed, const WorldParams& params = {});

/// Template shape with a +/-10% size jitter drawn from `rng`.
WorldObject make_object(int template_index, std::mt19937_64& rng);

struct SensorParams {
  double range = 30.0;
  double horizontal_resolution_deg = 0.5;
  int beams = 32;
  double min_elevation_deg = -16.0;
  double max_elevation_deg = 10.0;
  double noise = 0.01;  // Gaussian range noise sigma
};

struct LabeledScan {
  PointCloud points;                 // sensor frame
  std::vector<std::uint32_t> labels; // object id per point, 0 = ground
};

/// Ray-cast scan from `pose` (sensor to world). Rays without a hit within range are dropped.
LabeledScan render_scan(const SyntheticWorld& world, const RigidTransform& pose, const SensorParams& sensor,
                        std::mt19937_64& rng);

/// Nearest object whose footprint lies within `tolerance` of `p` (x-y), or 0.
std::uint32_t object_near(const SyntheticWorld& world, const Point3& p, double tolerance = 1.0);

struct TimedPose {
  double time = 0.0;
  RigidTransform pose;
};

/// Poses along the ring road every `step` metres, heading along the direction of travel.
/// `arc` may exceed 2 pi for repeated passes.
std::vector<TimedPose> ring_trajectory(double road_radius, double start_angle, double arc, double step, double dt,
                                       double sensor_height, bool clockwise = false);

}  // namespace segloc::pipeline
