#include "segloc/segmentation/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segloc::segmentation {

using geom::VoxelIndex;

IncrementalSegmenter::IncrementalSegmenter(SegmenterParams params) : params_(params) {
  if (!(params_.growing_radius > 0.0)) throw std::invalid_argument("growing_radius must be positive");
  if (!(params_.radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (params_.min_growth_ratio < 1.0) throw std::invalid_argument("min_growth_ratio must be >= 1");
}

std::optional<SegmentId> IncrementalSegmenter::label_of(const VoxelIndex& v) const {
  const auto it = voxels_.find(v);
  if (it == voxels_.end()) return std::nullopt;
  return it->second.segment;
}

std::vector<SegmentId> IncrementalSegmenter::live_segments() const {
  std::vector<SegmentId> ids;
  for (const auto& [id, seg] : segments_) ids.push_back(id);
  return ids;
}

std::vector<std::pair<SegmentId, SegmentId>> IncrementalSegmenter::take_merges() {
  return std::exchange(merges_, {});
}

void IncrementalSegmenter::attach(const geom::DynamicVoxelGrid& grid, const VoxelIndex& v, SegmentId id) {
  Segment& seg = segments_[id];
  seg.voxels.push_back(v);
  const Point3 lo = grid.voxel_center(v) - Point3::Constant(0.5 * grid.side());
  seg.bounds.extend(lo);
  seg.bounds.extend(lo + Point3::Constant(grid.side()));
}

SegmentId IncrementalSegmenter::merge(const std::set<SegmentId>& ids, std::set<SegmentId>& changed) {
  const SegmentId winner = *ids.begin();
  Segment& target = segments_[winner];
  for (auto it = std::next(ids.begin()); it != ids.end(); ++it) {
    auto node = segments_.extract(*it);
    for (const auto& v : node.mapped().voxels) {
      voxels_[v].segment = winner;
      target.voxels.push_back(v);
    }
    if (!node.mapped().bounds.empty()) {
      target.bounds.extend(node.mapped().bounds.min);
      target.bounds.extend(node.mapped().bounds.max);
    }
    merges_.emplace_back(*it, winner);
    changed.erase(*it);
  }
  changed.insert(winner);
  return winner;
}

void IncrementalSegmenter::process(const geom::DynamicVoxelGrid& grid, const VoxelIndex& v,
                                   std::set<SegmentId>& changed) {
  const geom::Voxel* voxel = grid.find(v);
  if (voxel == nullptr || !voxel->active) return;
  const auto state_it = voxels_.find(v);
  const bool labelled = state_it != voxels_.end();
  const std::size_t first_new = labelled ? state_it->second.processed : 0;
  if (first_new >= voxel->points.size()) return;

  std::set<SegmentId> touched;
  if (labelled) touched.insert(state_it->second.segment);

  const double r2 = params_.growing_radius * params_.growing_radius;
  const auto reach = static_cast<std::int64_t>(std::ceil(params_.growing_radius / grid.side()));
  for (std::int64_t di = -reach; di <= reach; ++di) {
    for (std::int64_t dj = -reach; dj <= reach; ++dj) {
      for (std::int64_t dk = -reach; dk <= reach; ++dk) {
        const VoxelIndex n{v.i + di, v.j + dj, v.k + dk};
        const auto label = voxels_.find(n);
        if (label == voxels_.end() || touched.contains(label->second.segment)) continue;
        const geom::Voxel* other = grid.find(n);
        if (other == nullptr) continue;
        bool linked = false;
        for (std::size_t a = first_new; a < voxel->points.size() && !linked; ++a) {
          for (const auto& q : other->points) {
            if ((voxel->points[a] - q).squaredNorm() <= r2) {
              linked = true;
              break;
            }
          }
        }
        if (linked) touched.insert(label->second.segment);
      }
    }
  }

  SegmentId id;
  if (touched.empty()) {
    id = next_id_++;
    segments_[id];
  } else if (touched.size() == 1) {
    id = *touched.begin();
  } else {
    id = merge(touched, changed);
  }
  if (!labelled) {
    voxels_[v] = VoxelState{id, voxel->points.size()};
    attach(grid, v, id);
  } else {
    voxels_[v].processed = voxel->points.size();
  }
  changed.insert(id);
}

std::vector<SegmentObservation> IncrementalSegmenter::grow(const geom::DynamicVoxelGrid& grid,
                                                           const std::vector<VoxelIndex>& seeds,
                                                           const Point3& robot_position, double timestamp) {
  pending_.insert(seeds.begin(), seeds.end());
  std::set<SegmentId> changed;
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (grid.find(*it) == nullptr) {
      it = pending_.erase(it);
      continue;
    }
    if ((grid.voxel_center(*it) - robot_position).norm() > params_.radius) {
      ++it;
      continue;
    }
    process(grid, *it, changed);
    it = pending_.erase(it);
  }

  std::vector<SegmentObservation> out;
  for (const SegmentId id : changed) {
    Segment& seg = segments_.at(id);
    std::size_t count = 0;
    for (const auto& v : seg.voxels) count += grid.find(v)->points.size();
    if (count < params_.min_points) continue;
    if (seg.last_emitted_points > 0 &&
        static_cast<double>(count) < params_.min_growth_ratio * static_cast<double>(seg.last_emitted_points)) {
      continue;
    }
    SegmentObservation obs;
    obs.segment_id = id;
    obs.index = seg.next_observation++;
    obs.timestamp = timestamp;
    obs.points.reserve(count);
    for (const auto& v : seg.voxels) {
      const auto& pts = grid.find(v)->points;
      obs.points.insert(obs.points.end(), pts.begin(), pts.end());
    }
    obs.centroid = geom::centroid(obs.points);
    seg.last_emitted_points = count;
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<SegmentId> IncrementalSegmenter::retire_complete(const Point3& robot_position,
                                                             geom::DynamicVoxelGrid& grid) {
  const double radius = params_.radius;
  std::vector<SegmentId> retired;
  for (auto it = segments_.begin(); it != segments_.end();) {
    const Segment& seg = it->second;
    bool complete = seg.bounds.distance_to(robot_position) > radius;
    if (!complete) {
      complete = true;
      for (const auto& v : seg.voxels) {
        const geom::Voxel* voxel = grid.find(v);
        const Point3 lo = grid.voxel_center(v) - Point3::Constant(0.5 * grid.side());
        geom::Aabb cube{lo, lo + Point3::Constant(grid.side())};
        if (cube.distance_to(robot_position) > radius) continue;
        for (const auto& p : voxel->points) {
          if ((p - robot_position).norm() <= radius) {
            complete = false;
            break;
          }
        }
        if (!complete) break;
      }
    }
    if (!complete) {
      ++it;
      continue;
    }
    for (const auto& v : seg.voxels) {
      voxels_.erase(v);
      pending_.erase(v);
    }
    grid.erase(seg.voxels);
    retired.push_back(it->first);
    it = segments_.erase(it);
  }
  return retired;
}

SegmentTrack mark_complete(SegmentTrack track, const Point3& robot_position, double radius) {
  if (track.complete || track.observations.empty()) return track;
  for (const auto& p : track.last().points) {
    if ((p - robot_position).norm() <= radius) return track;
  }
  track.complete = true;
  return track;
}

PointCloud remove_ground(const PointCloud& cloud, const geom::RigidTransform& robot_pose, double z_threshold,
                         double cell_size) {
  PointCloud out;
  if (cloud.empty()) return out;
  struct CellHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& c) const noexcept {
      return static_cast<std::size_t>(c.first * 73856093) ^ static_cast<std::size_t>(c.second * 19349663);
    }
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, double, CellHash> ground;
  std::vector<Point3> world;
  world.reserve(cloud.size());
  auto cell_of = [cell_size](const Point3& p) {
    return std::pair{static_cast<std::int64_t>(std::floor(p.x() / cell_size)),
                     static_cast<std::int64_t>(std::floor(p.y() / cell_size))};
  };
  for (const auto& p : cloud) {
    world.push_back(robot_pose.apply(p));
    if (!geom::is_finite(world.back())) continue;
    const auto c = cell_of(world.back());
    const auto [it, inserted] = ground.try_emplace(c, world.back().z());
    if (!inserted) it->second = std::min(it->second, world.back().z());
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!geom::is_finite(world[i])) continue;
    if (world[i].z() - ground.at(cell_of(world[i])) > z_threshold) out.push_back(cloud[i]);
  }
  return out;
}

}  // namespace segloc::segmentation
