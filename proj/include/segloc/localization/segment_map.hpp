#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "segloc/descriptors/descriptor.hpp"

namespace segloc::localization {

using descriptors::Descriptor;
using descriptors::SemanticClass;
using geom::Point3;
using segmentation::SegmentId;
using RobotId = std::uint32_t;

struct MapEntry {
  SegmentId id = 0;
  Point3 centroid = Point3::Zero();
  Descriptor descriptor;
  std::optional<SemanticClass> semantic;
  RobotId robot = 0;
  std::uint32_t observation_index = 0;
  double timestamp = 0.0;
  std::size_t point_count = 0;
};

/// One descriptor per segment id: the most recent observation wins.
class GlobalSegmentMap {
 public:
  /// Inserts or replaces. Throws std::invalid_argument when `entry` is older than
  /// the stored observation of the same id, or its dimension differs from the map's.
  void update(const MapEntry& entry);
  /// Builds the entry from the track's last observation.
  void update(const segmentation::SegmentTrack& track, const Descriptor& descriptor, RobotId robot = 0);

  bool erase(SegmentId id) { return entries_.erase(id) > 0; }
  const MapEntry* find(SegmentId id) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// 0 while empty.
  std::size_t dimension() const;
  const std::map<SegmentId, MapEntry>& entries() const { return entries_; }

 private:
  std::map<SegmentId, MapEntry> entries_;
};

struct Candidate {
  SegmentId local_id = 0;
  SegmentId global_id = 0;
  double distance = 0.0;
  Point3 local_centroid = Point3::Zero();
  Point3 global_centroid = Point3::Zero();
};

inline constexpr std::size_t kDefaultNeighbours = 40;

/// Exact k-nearest map entries (l2) for each query, ties broken by smaller id.
/// Entries whose semantic class is in `exclude` are skipped.
/// Throws std::invalid_argument on a dimension mismatch.
std::vector<Candidate> retrieve_candidates(const GlobalSegmentMap& map, const std::vector<Descriptor>& queries,
                                           std::size_t k = kDefaultNeighbours,
                                           const std::set<SemanticClass>& exclude = {});

// ---- compressed map file

inline constexpr std::uint16_t kMapFileVersion = 1;
inline constexpr std::size_t kMapHeaderBytes = 16;
inline constexpr std::size_t kMapLinkBytes = 36;

std::size_t map_record_bytes(std::size_t dim);

/// Entries in id order. Throws std::invalid_argument on mixed providers.
void write_map(std::ostream& out, const GlobalSegmentMap& map);
void write_map_file(const std::string& path, const GlobalSegmentMap& map);
/// Throws std::runtime_error on a bad magic, version or truncated input.
GlobalSegmentMap read_map(std::istream& in);
GlobalSegmentMap read_map_file(const std::string& path);

}  // namespace segloc::localization
