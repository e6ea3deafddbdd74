#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "segloc/geom/transform.hpp"
#include "segloc/geom/types.hpp"

namespace segloc::geom {

struct VoxelIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
  friend auto operator<=>(const VoxelIndex&, const VoxelIndex&) = default;
};

struct VoxelIndexHash {
  std::size_t operator()(const VoxelIndex& v) const noexcept {
    // Teschner et al. spatial hash primes.
    return static_cast<std::size_t>((v.i * 73856093) ^ (v.j * 19349663) ^ (v.k * 83492791));
  }
};

struct Voxel {
  std::vector<Point3> points;
  bool active = false;
};

struct InsertResult {
  /// Voxels whose state flipped inactive -> active during the call.
  std::vector<VoxelIndex> newly_active;
  /// Active voxels that received points during the call (superset of newly_active).
  std::vector<VoxelIndex> updated_active;
  std::size_t inserted = 0;
  std::size_t skipped = 0;
};

/// Sparse accumulation grid. A voxel is active once it holds at least
/// `activation_threshold` points.
class DynamicVoxelGrid {
 public:
  explicit DynamicVoxelGrid(double side = 0.1, std::size_t activation_threshold = 1);

  /// Transforms `cloud` by `pose` into the world frame and bins it.
  /// Non-finite points are skipped and counted.
  InsertResult insert_cloud(const PointCloud& cloud, const RigidTransform& pose);

  VoxelIndex index_of(const Point3& p) const;
  Point3 voxel_center(const VoxelIndex& v) const;

  const Voxel* find(const VoxelIndex& v) const;
  bool is_active(const VoxelIndex& v) const;

  /// Drops voxels and their points; returns the number of points removed.
  std::size_t erase(const std::vector<VoxelIndex>& voxels);

  double side() const { return side_; }
  std::size_t activation_threshold() const { return threshold_; }
  std::size_t voxel_count() const { return voxels_.size(); }
  std::size_t point_count() const { return point_count_; }

  void for_each(const std::function<void(const VoxelIndex&, const Voxel&)>& fn) const;

 private:
  double side_;
  std::size_t threshold_;
  std::size_t point_count_ = 0;
  std::unordered_map<VoxelIndex, Voxel, VoxelIndexHash> voxels_;
};

}  // namespace segloc::geom
