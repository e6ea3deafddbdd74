#include "segloc/geom/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace segloc::geom {

DynamicVoxelGrid::DynamicVoxelGrid(double side, std::size_t activation_threshold)
    : side_(side), threshold_(activation_threshold) {
  if (!(side > 0.0)) throw std::invalid_argument("DynamicVoxelGrid: side must be positive");
  if (activation_threshold == 0) throw std::invalid_argument("DynamicVoxelGrid: threshold must be >= 1");
}

VoxelIndex DynamicVoxelGrid::index_of(const Point3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / side_)),
          static_cast<std::int64_t>(std::floor(p.y() / side_)),
          static_cast<std::int64_t>(std::floor(p.z() / side_))};
}

Point3 DynamicVoxelGrid::voxel_center(const VoxelIndex& v) const {
  return Point3((v.i + 0.5) * side_, (v.j + 0.5) * side_, (v.k + 0.5) * side_);
}

InsertResult DynamicVoxelGrid::insert_cloud(const PointCloud& cloud, const RigidTransform& pose) {
  InsertResult result;
  std::unordered_set<VoxelIndex, VoxelIndexHash> touched;
  for (const auto& local : cloud) {
    if (!is_finite(local)) {
      ++result.skipped;
      continue;
    }
    const Point3 p = pose.apply(local);
    const VoxelIndex idx = index_of(p);
    Voxel& voxel = voxels_[idx];
    voxel.points.push_back(p);
    ++point_count_;
    ++result.inserted;
    if (!voxel.active && voxel.points.size() >= threshold_) {
      voxel.active = true;
      result.newly_active.push_back(idx);
    }
    if (voxel.active) touched.insert(idx);
  }
  // Deterministic order independent of hash-table iteration.
  result.updated_active.assign(touched.begin(), touched.end());
  std::sort(result.updated_active.begin(), result.updated_active.end());
  return result;
}

const Voxel* DynamicVoxelGrid::find(const VoxelIndex& v) const {
  const auto it = voxels_.find(v);
  return it == voxels_.end() ? nullptr : &it->second;
}

bool DynamicVoxelGrid::is_active(const VoxelIndex& v) const {
  const Voxel* voxel = find(v);
  return voxel != nullptr && voxel->active;
}

std::size_t DynamicVoxelGrid::erase(const std::vector<VoxelIndex>& voxels) {
  std::size_t removed = 0;
  for (const auto& v : voxels) {
    const auto it = voxels_.find(v);
    if (it == voxels_.end()) continue;
    removed += it->second.points.size();
    voxels_.erase(it);
  }
  point_count_ -= removed;
  return removed;
}

void DynamicVoxelGrid::for_each(const std::function<void(const VoxelIndex&, const Voxel&)>& fn) const {
  for (const auto& [idx, voxel] : voxels_) fn(idx, voxel);
}

}  // namespace segloc::geom
