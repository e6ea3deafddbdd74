#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "segloc/geom/types.hpp"
#include "segloc/segmentation/segmenter.hpp"

namespace segloc::prep {

using geom::Point3;
using geom::PointCloud;

inline constexpr std::array<int, 3> kGridCells{32, 32, 16};
inline constexpr int kGridVolume = 32 * 32 * 16;
inline constexpr double kMinVoxelSide = 0.1;

/// Flat occupancy index, x slowest and z fastest.
inline int grid_offset(int i, int j, int k) { return (i * kGridCells[1] + j) * kGridCells[2] + k; }

struct Alignment {
  PointCloud points;  // centred on the centroid, rotated about z by -angle
  Point3 centroid = Point3::Zero();
  double angle = 0.0;  // (-pi, pi]
  bool flipped = false;
  bool degenerate = false;
};

Alignment align(const PointCloud& points);

struct VoxelizedSegment {
  std::vector<std::uint8_t> occupancy = std::vector<std::uint8_t>(kGridVolume, 0);
  Point3 voxel_sides = Point3::Constant(kMinVoxelSide);
  Point3 centroid = Point3::Zero();  // original frame
  double angle = 0.0;
  segmentation::SegmentId segment_id = 0;
  std::uint32_t observation_index = 0;

  std::size_t occupied() const;
  /// Voxel sides divided by the minimum side; fed to the network beside the grid.
  Point3 scale() const { return voxel_sides / kMinVoxelSide; }
};

/// Bins aligned points on the fixed grid centred on their centroid. Indices outside
/// the grid (possible when the centroid is off the bounding-box centre) are clamped.
VoxelizedSegment voxelize(const PointCloud& aligned);

/// Grid cell (i, j, k) of one aligned point, given the grid centre and sides.
std::array<int, 3> cell_of(const Point3& p, const Point3& centre, const Point3& sides);

/// align + voxelize with the observation metadata filled in.
VoxelizedSegment prepare(const segmentation::SegmentObservation& obs);

/// Occupied cell centres mapped back to the original frame.
PointCloud devoxelize(const VoxelizedSegment& v, const std::vector<double>& probabilities, double threshold = 0.5);

struct AugmentParams {
  int rotations = 5;
  double max_yaw = 6.283185307179586;  // yaw offsets drawn from [0, max_yaw)
  int slices = 0;
  int slice_retries = 20;
  double min_keep_fraction = 0.5;
};

struct AugmentResult {
  std::vector<PointCloud> clouds;  // aligned frame, first entry is the original
  int skipped_slices = 0;
};

/// Rotated copies are yaw offsets on top of the alignment; sliced copies cut the
/// raw points with a random plane and are re-aligned.
AugmentResult augment(const PointCloud& points, const AugmentParams& params, std::mt19937_64& rng);

}  // namespace segloc::prep
