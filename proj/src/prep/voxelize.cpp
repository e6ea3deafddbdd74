#include "segloc/prep/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "segloc/geom/pca.hpp"
#include "segloc/geom/transform.hpp"

namespace segloc::prep {

namespace {

PointCloud rotate_z(const PointCloud& pts, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  PointCloud out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.emplace_back(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
  return out;
}

}  // namespace

Alignment align(const PointCloud& points) {
  Alignment a;
  a.centroid = geom::centroid(points);
  PointCloud centred;
  centred.reserve(points.size());
  for (const auto& p : points) centred.push_back(p - a.centroid);

  const auto pca = points.size() >= 2 ? geom::pca_2d(centred) : geom::Pca2dResult{};
  a.degenerate = pca.degenerate;
  if (pca.degenerate) {
    a.points = std::move(centred);
    return a;
  }
  a.angle = pca.angle;
  a.points = rotate_z(centred, -a.angle);
  std::size_t above = 0, below = 0;
  for (const auto& p : a.points) {
    above += p.y() > 0.0;
    below += p.y() < 0.0;
  }
  if (above > below) {
    a.flipped = true;
    a.angle = geom::wrap_angle(a.angle + std::numbers::pi);
    for (auto& p : a.points) p = Point3(-p.x(), -p.y(), p.z());
  }
  return a;
}

std::size_t VoxelizedSegment::occupied() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), 1));
}

std::array<int, 3> cell_of(const Point3& p, const Point3& centre, const Point3& sides) {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - centre[a]) / sides[a] + kGridCells[a] / 2.0);
    c[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(kGridCells[a] - 1)));
  }
  return c;
}

VoxelizedSegment voxelize(const PointCloud& aligned) {
  if (aligned.empty()) throw std::invalid_argument("voxelize: empty segment");
  VoxelizedSegment v;
  const Point3 centre = geom::centroid(aligned);
  const Point3 extent = geom::bounding_box(aligned).extent();
  for (int a = 0; a < 3; ++a) v.voxel_sides[a] = std::max(kMinVoxelSide, extent[a] / kGridCells[a]);
  for (const auto& p : aligned) {
    const auto c = cell_of(p, centre, v.voxel_sides);
    v.occupancy[grid_offset(c[0], c[1], c[2])] = 1;
  }
  return v;
}

VoxelizedSegment prepare(const segmentation::SegmentObservation& obs) {
  const Alignment a = align(obs.points);
  VoxelizedSegment v = voxelize(a.points);
  v.centroid = a.centroid;
  v.angle = a.angle;
  v.segment_id = obs.segment_id;
  v.observation_index = obs.index;
  return v;
}

PointCloud devoxelize(const VoxelizedSegment& v, const std::vector<double>& probabilities, double threshold) {
  if (probabilities.size() != static_cast<std::size_t>(kGridVolume))
    throw std::invalid_argument("devoxelize: expected a full grid of probabilities");
  const geom::RigidTransform to_world = geom::RigidTransform::from_yaw(v.angle, v.centroid);
  PointCloud out;
  for (int i = 0; i < kGridCells[0]; ++i)
    for (int j = 0; j < kGridCells[1]; ++j)
      for (int k = 0; k < kGridCells[2]; ++k) {
        if (probabilities[grid_offset(i, j, k)] < threshold) continue;
        const Point3 local((i + 0.5 - kGridCells[0] / 2.0) * v.voxel_sides.x(),
                           (j + 0.5 - kGridCells[1] / 2.0) * v.voxel_sides.y(),
                           (k + 0.5 - kGridCells[2] / 2.0) * v.voxel_sides.z());
        out.push_back(to_world.apply(local));
      }
  return out;
}

AugmentResult augment(const PointCloud& points, const AugmentParams& params, std::mt19937_64& rng) {
  AugmentResult out;
  const Alignment base = align(points);
  out.clouds.push_back(base.points);
  std::uniform_real_distribution<double> yaw(0.0, params.max_yaw);
  for (int r = 0; r < params.rotations; ++r) out.clouds.push_back(rotate_z(base.points, yaw(rng)));

  if (params.slices <= 0 || points.size() < 2) {
    out.skipped_slices = std::max(0, params.slices);
    return out;
  }
  const geom::Aabb box = geom::bounding_box(points);
  const std::size_t min_keep = static_cast<std::size_t>(std::ceil(params.min_keep_fraction * points.size()));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < params.slices; ++s) {
    bool done = false;
    for (int attempt = 0; attempt < params.slice_retries && !done; ++attempt) {
      Point3 origin;
      for (int a = 0; a < 3; ++a) origin[a] = box.min[a] + unit(rng) * (box.max[a] - box.min[a]);
      Point3 normal(gauss(rng), gauss(rng), gauss(rng));
      if (normal.norm() < 1e-12) continue;
      normal.normalize();
      PointCloud kept;
      for (const auto& p : points)
        if ((p - origin).dot(normal) >= 0.0) kept.push_back(p);
      if (kept.size() < min_keep || kept.size() == points.size()) continue;
      out.clouds.push_back(align(kept).points);
      done = true;
    }
    if (!done) ++out.skipped_slices;
  }
  return out;
}

}  // namespace segloc::prep
