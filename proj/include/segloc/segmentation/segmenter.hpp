#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "segloc/geom/transform.hpp"
#include "segloc/geom/types.hpp"
#include "segloc/geom/voxel_grid.hpp"

namespace segloc::segmentation {

using geom::Point3;
using geom::PointCloud;
using SegmentId = std::uint64_t;

/// Snapshot of one growing segment.
struct SegmentObservation {
  SegmentId segment_id = 0;
  std::uint32_t index = 0;
  PointCloud points;  // world frame
  Point3 centroid = Point3::Zero();
  double timestamp = 0.0;
};

/// Ordered observations s_1..s_n of one physical segment.
struct SegmentTrack {
  SegmentId id = 0;
  std::vector<SegmentObservation> observations;
  bool complete = false;
  /// Set when the segment was absorbed by another during a merge.
  std::optional<SegmentId> merged_into;

  const SegmentObservation& last() const { return observations.back(); }
};

struct SegmenterParams {
  double radius = 50.0;          // R: only seeds within R of the robot are grown
  double growing_radius = 0.2;   // point-to-point linking distance
  std::size_t min_points = 100;  // smallest segment that is emitted
  /// A changed segment is re-emitted only after growing by this factor since its
  /// previous snapshot. 1.0 emits on every change.
  double min_growth_ratio = 1.0;
};

/// Incremental Euclidean region growing driven by newly active / updated voxels.
///
/// Seeds outside R stay pending until the robot comes within R. Every point pair
/// is tested when the later of the two arrives, so the final partition equals the
/// connected components of the growing-radius graph over all processed points.
class IncrementalSegmenter {
 public:
  explicit IncrementalSegmenter(SegmenterParams params = {});

  /// Grows segments from `seeds` (typically InsertResult::updated_active) and returns
  /// one snapshot per changed segment that has at least `min_points` points, in id order.
  std::vector<SegmentObservation> grow(const geom::DynamicVoxelGrid& grid, const std::vector<geom::VoxelIndex>& seeds,
                                       const Point3& robot_position, double timestamp);

  /// Retires segments whose points all lie farther than R from the robot. Their voxels
  /// are erased from `grid`; the retired ids are returned in ascending order.
  std::vector<SegmentId> retire_complete(const Point3& robot_position, geom::DynamicVoxelGrid& grid);

  /// (absorbed id, surviving id) pairs recorded since the last call.
  std::vector<std::pair<SegmentId, SegmentId>> take_merges();

  std::optional<SegmentId> label_of(const geom::VoxelIndex& v) const;
  std::vector<SegmentId> live_segments() const;
  std::size_t pending_seed_count() const { return pending_.size(); }
  const SegmenterParams& params() const { return params_; }

 private:
  struct VoxelState {
    SegmentId segment = 0;
    std::size_t processed = 0;
  };
  struct Segment {
    std::vector<geom::VoxelIndex> voxels;
    geom::Aabb bounds;  // of voxel cubes
    std::size_t last_emitted_points = 0;
    std::uint32_t next_observation = 0;
  };

  void process(const geom::DynamicVoxelGrid& grid, const geom::VoxelIndex& v, std::set<SegmentId>& changed);
  SegmentId merge(const std::set<SegmentId>& ids, std::set<SegmentId>& changed);
  void attach(const geom::DynamicVoxelGrid& grid, const geom::VoxelIndex& v, SegmentId id);

  SegmenterParams params_;
  SegmentId next_id_ = 0;
  std::unordered_map<geom::VoxelIndex, VoxelState, geom::VoxelIndexHash> voxels_;
  std::map<SegmentId, Segment> segments_;
  std::set<geom::VoxelIndex> pending_;
  std::vector<std::pair<SegmentId, SegmentId>> merges_;
};

/// Returns `track` with `complete` set when every point of its last observation lies
/// farther than R from the robot. Idempotent.
SegmentTrack mark_complete(SegmentTrack track, const Point3& robot_position, double radius);

/// Drops points within `z_threshold` of the local ground. The ground height of a
/// 1 m world-frame x-y cell is the minimum z of the cloud's points in that cell.
/// `cloud` is given in the sensor frame (`robot_pose` maps it to the gravity-aligned
/// world frame); survivors are returned in the sensor frame.
PointCloud remove_ground(const PointCloud& cloud, const geom::RigidTransform& robot_pose, double z_threshold,
                         double cell_size = 1.0);

}  // namespace segloc::segmentation
