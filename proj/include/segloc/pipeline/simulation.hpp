#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segloc/descriptors/model.hpp"
#include "segloc/localization/pose_graph.hpp"
#include "segloc/localization/segment_map.hpp"
#include "segloc/localization/verification.hpp"
#include "segloc/pipeline/config.hpp"
#include "segloc/pipeline/io.hpp"
#include "segloc/pipeline/world.hpp"

namespace segloc::pipeline {

using localization::RobotId;
using segmentation::SegmentId;

/// Map-wide segment id: robot in the top 16 bits, the robot's own id below.
SegmentId global_segment_id(RobotId robot, SegmentId local);
RobotId robot_of(SegmentId global);

/// What a robot worker sends to the central worker after one scan.
struct RobotMessage {
  RobotId robot = 0;
  std::size_t step = 0;
  double time = 0.0;
  RigidTransform odometry;  // dead-reckoned pose in the robot's own frame
  std::size_t cloud_points = 0;
  std::size_t segment_points = 0;
  std::vector<descriptors::Descriptor> descriptors;
  std::vector<std::size_t> descriptor_points;                // per descriptor
  std::vector<std::pair<SegmentId, SegmentId>> merges;      // (absorbed, survivor), global ids
  std::vector<segmentation::SegmentObservation> observations;  // only with keep_tracks
};

struct BandwidthStats {
  std::uint64_t cloud_bytes = 0;       // raw scans, 12 bytes per point
  std::uint64_t segment_bytes = 0;     // emitted segment snapshots, 12 bytes per point
  std::uint64_t descriptor_bytes = 0;  // descriptor wire records
  std::size_t scans = 0;
  std::size_t observations = 0;
  std::size_t descriptors = 0;

  BandwidthStats& operator+=(const BandwidthStats& o);
};

struct LocalizationEvent {
  double time = 0.0;
  RobotId query_robot = 0;
  RobotId map_robot = 0;
  std::size_t query_node = 0;
  std::size_t map_node = 0;
  localization::LocalizationResult result;
  /// Distance between the recovered and true position of the query robot in the
  /// map robot's frame, taken at the matched map node.
  double translation_error = 0.0;
};

struct SimulationResult {
  std::vector<BandwidthStats> bandwidth;  // per robot
  BandwidthStats total;
  std::vector<LocalizationEvent> localizations;
  localization::GlobalSegmentMap map;
  localization::PoseGraph graph;
  std::vector<std::vector<TimedPose>> truth;            // per robot
  std::vector<std::vector<RigidTransform>> odometry;    // per robot
  std::vector<std::vector<std::size_t>> nodes;          // per robot, graph node per step
  std::vector<std::vector<segmentation::SegmentTrack>> tracks;  // per robot, with keep_tracks
  std::size_t verification_attempts = 0;  // query set vs. one robot pool
  double duration = 0.0;
  std::optional<std::string> error;  // set when a worker failed; results are partial
};

/// Robot trajectories of a scenario.
std::vector<std::vector<TimedPose>> scenario_trajectories(const ScenarioConfig& config);

/// Plays every robot through `world` and runs the central localization loop.
/// `model` may be null for the eigen provider. Deterministic for a fixed config,
/// in both the round-robin and the threaded mode.
SimulationResult run_multi_robot(const ScenarioConfig& config, const SyntheticWorld& world,
                                 descriptors::DescriptorModel* model);

/// map.smap, trajectories.csv, localizations.csv, stats.csv and, for learned
/// providers, reconstruction.ply in `out_dir`.
void write_artifacts(const SimulationResult& result, const ScenarioConfig& config, const std::string& out_dir,
                     descriptors::DescriptorModel* model);

/// Table-like summary rows (name, value).
std::vector<std::pair<std::string, double>> stats_rows(const SimulationResult& result);

std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t file_checksum(const std::string& path);

/// Ground-truth label of each track: the world object nearest to its last centroid
/// (mapped by `to_world`); tracks near no object are left out.
std::map<SegmentId, SegmentLabel> label_tracks(const std::vector<segmentation::SegmentTrack>& tracks,
                                               const SyntheticWorld& world, const RigidTransform& to_world,
                                               double tolerance = 1.0);

}  // namespace segloc::pipeline
