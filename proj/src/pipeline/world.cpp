#include "segloc/pipeline/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace segloc::pipeline {

namespace {

struct Template {
  ShapeKind kind;
  double l, w, h, thickness;
  SemanticClass label;
};

constexpr Template kTemplates[kObjectTemplates] = {
    {ShapeKind::box, 4.5, 1.8, 1.5, 0, SemanticClass::vehicle},
    {ShapeKind::box, 4.8, 2.0, 1.9, 0, SemanticClass::vehicle},
    {ShapeKind::box, 5.5, 2.1, 2.5, 0, SemanticClass::vehicle},
    {ShapeKind::box, 8.0, 2.5, 3.2, 0, SemanticClass::vehicle},
    {ShapeKind::box, 3.6, 1.6, 1.45, 0, SemanticClass::vehicle},
    {ShapeKind::box, 10.0, 6.0, 6.0, 0, SemanticClass::building},
    {ShapeKind::box, 14.0, 5.0, 8.0, 0, SemanticClass::building},
    {ShapeKind::l_prism, 12.0, 9.0, 7.0, 3.0, SemanticClass::building},
    {ShapeKind::l_prism, 8.0, 8.0, 5.0, 2.5, SemanticClass::building},
    {ShapeKind::wall, 10.0, 0.3, 2.5, 0, SemanticClass::building},
    {ShapeKind::wall, 6.0, 0.3, 1.2, 0, SemanticClass::other},
    {ShapeKind::cylinder, 0.3, 0.3, 5.0, 0, SemanticClass::other},
    {ShapeKind::cylinder, 0.6, 0.6, 3.0, 0, SemanticClass::other},
    {ShapeKind::cylinder, 2.5, 2.5, 3.0, 0, SemanticClass::other},
    {ShapeKind::cylinder, 1.0, 1.0, 6.0, 0, SemanticClass::other},
    {ShapeKind::box, 1.2, 0.8, 1.3, 0, SemanticClass::other},
    {ShapeKind::box, 2.5, 2.5, 2.8, 0, SemanticClass::other},
    {ShapeKind::l_prism, 4.0, 3.0, 1.5, 0.4, SemanticClass::other},
    {ShapeKind::box, 4.0, 1.5, 2.6, 0, SemanticClass::other},
    {ShapeKind::box, 6.0, 2.4, 2.6, 0, SemanticClass::other},
};

// Oriented box or vertical cylinder, base on the ground.
struct Primitive {
  bool cylinder = false;
  double cx = 0, cy = 0, yaw = 0;
  double hx = 0, hy = 0, height = 0;  // half sizes; cylinder radius in hx
  std::uint32_t id = 0;
  double reach = 0;  // x-y bounding radius
};

std::vector<Primitive> primitives_of(const WorldObject& o) {
  std::vector<Primitive> out;
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  auto add_box = [&](double lx, double ly, double hx, double hy) {
    Primitive p;
    p.cx = o.x + c * lx - s * ly;
    p.cy = o.y + s * lx + c * ly;
    p.yaw = o.yaw;
    p.hx = hx;
    p.hy = hy;
    p.height = o.size.z();
    p.id = o.id;
    p.reach = std::hypot(hx, hy);
    out.push_back(p);
  };
  switch (o.kind) {
    case ShapeKind::box:
    case ShapeKind::wall:
      add_box(0, 0, o.size.x() / 2, o.size.y() / 2);
      break;
    case ShapeKind::cylinder: {
      Primitive p;
      p.cylinder = true;
      p.cx = o.x;
      p.cy = o.y;
      p.hx = o.size.x() / 2;
      p.height = o.size.z();
      p.id = o.id;
      p.reach = p.hx;
      out.push_back(p);
      break;
    }
    case ShapeKind::l_prism: {
      const double t = o.thickness, ox = -o.size.x() / 2, oy = -o.size.y() / 2;
      add_box(ox + o.size.x() / 2, oy + t / 2, o.size.x() / 2, t / 2);
      add_box(ox + t / 2, oy + (o.size.y() + t) / 2, t / 2, (o.size.y() - t) / 2);
      break;
    }
  }
  return out;
}

// Entry distance along the ray, or +inf.
double intersect(const Primitive& p, const Point3& o, const Point3& d) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (p.cylinder) {
    const double ox = o.x() - p.cx, oy = o.y() - p.cy;
    double best = inf;
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-15) {
      const double b = ox * d.x() + oy * d.y();
      const double cc = ox * ox + oy * oy - p.hx * p.hx;
      const double disc = b * b - a * cc;
      if (disc >= 0) {
        const double t = (-b - std::sqrt(disc)) / a;
        const double z = o.z() + t * d.z();
        if (t > 1e-9 && z >= 0 && z <= p.height) best = t;
      }
    }
    if (d.z() < 0 && o.z() > p.height) {
      const double t = (p.height - o.z()) / d.z();
      const double x = ox + t * d.x(), y = oy + t * d.y();
      if (x * x + y * y <= p.hx * p.hx) best = std::min(best, t);
    }
    return best;
  }
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  const double rx = o.x() - p.cx, ry = o.y() - p.cy;
  const double lo[3] = {c * rx + s * ry, -s * rx + c * ry, o.z()};
  const double ld[3] = {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
  const double mn[3] = {-p.hx, -p.hy, 0.0}, mx[3] = {p.hx, p.hy, p.height};
  double t0 = -inf, t1 = inf;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(ld[a]) < 1e-15) {
      if (lo[a] < mn[a] || lo[a] > mx[a]) return inf;
      continue;
    }
    double ta = (mn[a] - lo[a]) / ld[a], tb = (mx[a] - lo[a]) / ld[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t0 <= 1e-9) return inf;
  return t0;
}

double footprint_distance(const Primitive& p, double x, double y) {
  const double rx = x - p.cx, ry = y - p.cy;
  if (p.cylinder) return std::max(0.0, std::hypot(rx, ry) - p.hx);
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  const double lx = c * rx + s * ry, ly = -s * rx + c * ry;
  return std::hypot(std::max(0.0, std::abs(lx) - p.hx), std::max(0.0, std::abs(ly) - p.hy));
}

}  // namespace

double WorldObject::footprint_radius() const {
  return kind == ShapeKind::cylinder ? size.x() / 2 : 0.5 * std::hypot(size.x(), size.y());
}

const WorldObject* SyntheticWorld::find(std::uint32_t id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

WorldObject make_object(int template_index, std::mt19937_64& rng) {
  if (template_index < 0 || template_index >= kObjectTemplates)
    throw std::invalid_argument("unknown object template " + std::to_string(template_index));
  const Template& t = kTemplates[template_index];
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  WorldObject o;
  o.kind = t.kind;
  o.template_index = template_index;
  o.label = t.label;
  const double j = jitter(rng);
  o.size = Point3(t.l * j, (t.kind == ShapeKind::cylinder ? t.l * j : t.w * jitter(rng)), t.h * jitter(rng));
  o.thickness = t.thickness;
  return o;
}

SyntheticWorld generate_world(std::uint64_t seed, const WorldParams& params) {
  if (!(params.extent > 0)) throw std::invalid_argument("world extent must be positive");
  if (params.road_radius <= params.road_half_width || params.road_radius + params.road_half_width > params.extent / 2)
    throw std::invalid_argument("road radius does not fit the world extent");
  SyntheticWorld world;
  world.seed = seed;
  world.params = params;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, kObjectTemplates - 1);
  const std::size_t max_attempts = 200 * params.object_count + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && world.objects.size() < params.object_count; ++attempt) {
    WorldObject o = make_object(pick(rng), rng);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double r0 = params.road_half_width + 0.5 + o.footprint_radius();
    const double slack = std::max(0.0, params.max_offset - r0);
    const double radial = params.road_radius + side * (r0 + slack * unit(rng));
    o.x = radial * std::cos(theta);
    o.y = radial * std::sin(theta);
    const double tangent = theta + std::numbers::pi / 2;
    if (o.kind == ShapeKind::box && o.label != SemanticClass::other)
      o.yaw = tangent + 0.15 * (unit(rng) - 0.5);
    else
      o.yaw = 2.0 * std::numbers::pi * unit(rng);
    const double fr = o.footprint_radius();
    if (radial - fr < 0.5 || std::abs(o.x) + fr > params.extent / 2 || std::abs(o.y) + fr > params.extent / 2) continue;
    bool clear = true;
    for (const auto& other : world.objects)
      if (std::hypot(o.x - other.x, o.y - other.y) < fr + other.footprint_radius() + params.min_gap) {
        clear = false;
        break;
      }
    if (!clear) continue;
    o.id = static_cast<std::uint32_t>(world.objects.size() + 1);
    world.objects.push_back(o);
  }
  return world;
}

LabeledScan render_scan(const SyntheticWorld& world, const RigidTransform& pose, const SensorParams& sensor,
                        std::mt19937_64& rng) {
  LabeledScan scan;
  const Point3 origin = pose.translation();
  std::vector<Primitive> near;
  for (const auto& o : world.objects)
    for (const auto& p : primitives_of(o))
      if (std::hypot(p.cx - origin.x(), p.cy - origin.y()) - p.reach <= sensor.range) near.push_back(p);
  std::normal_distribution<double> noise(0.0, sensor.noise > 0 ? sensor.noise : 1.0);
  const int columns = static_cast<int>(std::lround(360.0 / sensor.horizontal_resolution_deg));
  const double deg = std::numbers::pi / 180.0;
  for (int b = 0; b < sensor.beams; ++b) {
    const double elev = sensor.beams == 1 ? sensor.min_elevation_deg * deg
                                          : (sensor.min_elevation_deg +
                                             (sensor.max_elevation_deg - sensor.min_elevation_deg) * b / (sensor.beams - 1)) *
                                                deg;
    for (int col = 0; col < columns; ++col) {
      const double az = col * sensor.horizontal_resolution_deg * deg;
      const Point3 local(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
      const Point3 d = pose.rotation() * local;
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t label = 0;
      if (d.z() < -1e-12) best = -origin.z() / d.z();
      for (const auto& p : near) {
        const double t = intersect(p, origin, d);
        if (t < best) {
          best = t;
          label = p.id;
        }
      }
      if (!(best <= sensor.range)) continue;
      const double r = sensor.noise > 0 ? best + noise(rng) : best;
      scan.points.push_back(local * r);
      scan.labels.push_back(label);
    }
  }
  return scan;
}

std::uint32_t object_near(const SyntheticWorld& world, const Point3& p, double tolerance) {
  std::uint32_t best_id = 0;
  double best = tolerance;
  for (const auto& o : world.objects)
    for (const auto& prim : primitives_of(o)) {
      const double d = footprint_distance(prim, p.x(), p.y());
      if (d < best || (d == best && (best_id == 0 || o.id < best_id))) {
        best_id = o.id;
        best = d;
      }
    }
  return best_id;
}

std::vector<TimedPose> ring_trajectory(double road_radius, double start_angle, double arc, double step, double dt,
                                       double sensor_height, bool clockwise) {
  if (!(step > 0) || !(road_radius > 0) || arc < 0) throw std::invalid_argument("ring trajectory: bad parameters");
  std::vector<TimedPose> out;
  const std::size_t n = static_cast<std::size_t>(std::floor(arc * road_radius / step)) + 1;
  const double dir = clockwise ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = start_angle + dir * (i * step / road_radius);
    const double heading = a + dir * std::numbers::pi / 2;
    out.push_back({i * dt, RigidTransform::from_yaw(heading, Point3(road_radius * std::cos(a),
                                                                    road_radius * std::sin(a), sensor_height))});
  }
  return out;
}

}  // namespace segloc::pipeline
