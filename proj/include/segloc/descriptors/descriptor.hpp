#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "segloc/geom/types.hpp"
#include "segloc/segmentation/segmenter.hpp"

namespace segloc::descriptors {

using geom::Point3;
using geom::PointCloud;
using segmentation::SegmentId;

enum class Provider : std::uint8_t { segmap = 0, autoencoder = 1, eigen = 2 };

enum class SemanticClass : std::uint8_t { vehicle = 0, building = 1, other = 2 };
inline constexpr int kSemanticClasses = 3;
inline constexpr std::uint8_t kNoSemantic = 0xff;

std::string to_string(Provider p);
/// Throws std::invalid_argument for unknown names.
Provider provider_from_string(const std::string& s);
std::string to_string(SemanticClass c);
SemanticClass semantic_from_string(const std::string& s);

struct Descriptor {
  std::vector<double> values;
  Provider provider = Provider::segmap;
  Point3 voxel_sides = Point3::Constant(0.1);
  Point3 centroid = Point3::Zero();
  double angle = 0.0;
  SegmentId segment_id = 0;
  std::uint32_t observation_index = 0;
  std::optional<SemanticClass> semantic;
};

double l2_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace segloc::descriptors
