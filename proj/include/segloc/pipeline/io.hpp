#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "segloc/descriptors/descriptor.hpp"
#include "segloc/segmentation/segmenter.hpp"

namespace segloc::pipeline {

/// Bad or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CloudFormat { csv, ply };

struct IngestReport {
  geom::PointCloud points;
  std::size_t rows = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based
};

inline constexpr double kMaxMalformedFraction = 0.01;

/// CSV rows "x,y,z" (an optional header line is allowed) or ASCII PLY with x, y, z
/// vertex properties. Coordinates are read as float32. Up to 1% malformed rows are
/// skipped; more throws DataError naming the offending lines.
IngestReport ingest_cloud_file(const std::string& path, std::optional<CloudFormat> format = std::nullopt);
geom::PointCloud read_cloud(const std::string& path);

void write_cloud_csv(const std::string& path, const geom::PointCloud& points);
void write_cloud_ply(const std::string& path, const geom::PointCloud& points);

/// One row per point: segment_id,observation,timestamp,x,y,z.
void write_tracks_csv(const std::string& path, const std::vector<segmentation::SegmentTrack>& tracks);
std::vector<segmentation::SegmentTrack> read_tracks_csv(const std::string& path);

struct SegmentLabel {
  descriptors::SemanticClass label = descriptors::SemanticClass::other;
  std::uint32_t object_id = 0;
};
void write_labels_csv(const std::string& path, const std::map<segmentation::SegmentId, SegmentLabel>& labels);
std::map<segmentation::SegmentId, SegmentLabel> read_labels_csv(const std::string& path);

/// segment_id,observation,provider,cx,cy,cz,sx,sy,sz,angle,v0,...
void write_descriptors_csv(const std::string& path, const std::vector<descriptors::Descriptor>& descriptors);
std::vector<descriptors::Descriptor> read_descriptors_csv(const std::string& path);

}  // namespace segloc::pipeline
