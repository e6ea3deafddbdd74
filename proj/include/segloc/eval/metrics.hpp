#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "segloc/descriptors/descriptor.hpp"
#include "segloc/geom/convex_hull.hpp"
#include "segloc/segmentation/segmenter.hpp"

namespace segloc::eval {

using geom::Point3;
using geom::PointCloud;
using segmentation::SegmentId;
using segmentation::SegmentTrack;

// ---- ground-truth correspondences

struct Correspondence {
  SegmentId a = 0, b = 0;  // a < b
  double ratio = 0.0;
};

struct CorrespondenceParams {
  double min_ratio = 0.3;
  double max_centroid_distance = 3.0;
  double raster = 0.1;
};

struct CorrespondenceResult {
  std::vector<Correspondence> pairs;
  std::size_t degenerate_skipped = 0;
};

/// Intersection over union of two hull volumes from cell-centre containment on a
/// `raster` grid spanning both bounding boxes. nullopt when either hull is degenerate.
std::optional<double> hull_iou(const geom::ConvexHull& a, const geom::ConvexHull& b, double raster = 0.1);

/// Compares the last observations of every track pair within the centroid gate.
CorrespondenceResult generate_correspondences(const std::vector<SegmentTrack>& tracks,
                                              const CorrespondenceParams& params = {});

// ---- ROC

struct ObservationRef {
  SegmentId track = 0;
  std::uint32_t observation = 0;  // position in SegmentTrack::observations
  auto operator<=>(const ObservationRef&) const = default;
};

struct ObservationPair {
  ObservationRef a, b;
  bool positive = false;
};

struct RocPairParams {
  std::size_t negatives_per_positive = 1000;
  double min_negative_distance = 20.0;
  std::uint64_t seed = 0;
};

/// Every observation pair across each correspondence is a positive; negatives are
/// distinct observation pairs of tracks whose last centroids are farther apart than
/// the gate. Throws std::runtime_error naming the shortfall when too few exist.
std::vector<ObservationPair> build_roc_pairs(const std::vector<Correspondence>& correspondences,
                                             const std::vector<SegmentTrack>& tracks, const RocPairParams& params);

struct ScoredPair {
  double distance = 0.0;
  bool positive = false;
};

struct RocPoint {
  double threshold = 0.0, tpr = 0.0, fpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // thresholds ascending, starting at (0,0)
  double auc = 0.0;
};

/// A pair is predicted positive when distance <= threshold. Tied distances move
/// together. Throws std::invalid_argument if either class is empty.
RocCurve roc(const std::vector<ScoredPair>& pairs);

// ---- rank versus completeness

struct RankQuery {
  std::vector<double> descriptor;
  double completeness = 1.0;
  SegmentId target = 0;
};

struct RankBin {
  double lower = 0.0;  // bins of width 0.1; 1.0 falls in the last bin
  double median_rank = 0.0;
  std::size_t count = 0;
};

/// Rank of `target` among `map` = 1 + entries strictly closer than it.
std::size_t rank_of(const std::vector<double>& query, SegmentId target,
                    const std::vector<std::pair<SegmentId, std::vector<double>>>& map);

std::vector<RankBin> rank_vs_completeness(const std::vector<RankQuery>& queries,
                                          const std::vector<std::pair<SegmentId, std::vector<double>>>& map);

// ---- reconstruction quality

struct ReconstructionScore {
  double ratio = 0.0;
  bool empty = false;
};

/// Mean of the two directed fractions of points with a partner within the largest voxel side.
ReconstructionScore reconstruction_ratio(const PointCloud& original, const PointCloud& reconstructed,
                                         const Point3& voxel_sides);

// ---- compression accounting

inline constexpr std::size_t kBytesPerPoint = 12;
inline constexpr std::size_t kLinkBytes = 36;

struct CompressionReport {
  std::size_t segments = 0, excluded_segments = 0;
  double raw_bytes = 0.0;
  double compressed_bytes = 0.0;
  double compressed_bytes_excl = 0.0;
  /// nullopt when the denominator is zero.
  std::optional<double> ratio, ratio_excl;
};

/// Ratios from given totals; the excluded variant scales the compressed size by
/// the fraction of segments kept.
CompressionReport compression_from_totals(double raw_bytes, double compressed_bytes, std::size_t segments,
                                          std::size_t excluded_segments);

struct MapSegmentSummary {
  std::size_t point_count = 0;
  std::optional<descriptors::SemanticClass> semantic;
};

CompressionReport compression_report(const std::vector<MapSegmentSummary>& map, std::size_t descriptor_dim,
                                     const std::set<descriptors::SemanticClass>& exclude);

// ---- CSV outputs

void write_roc_csv(const std::string& path, const RocCurve& curve);
void write_rank_csv(const std::string& path, const std::vector<RankBin>& bins);
void write_recon_csv(const std::string& path, const std::vector<std::pair<int, double>>& rows);
void write_compression_csv(const std::string& path, const CompressionReport& r);

}  // namespace segloc::eval
