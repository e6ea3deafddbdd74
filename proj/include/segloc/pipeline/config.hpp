#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "segloc/descriptors/descriptor.hpp"
#include "segloc/descriptors/model.hpp"
#include "segloc/pipeline/world.hpp"
#include "segloc/segmentation/segmenter.hpp"

namespace segloc::pipeline {

struct RobotConfig {
  double start_angle = 0.0;  // radians on the ring road
  double arc = 6.283185307179586;
  bool clockwise = false;
  bool transmit = true;
};

struct OdometryNoise {
  double translation = 0.005;  // per-step sigma, metres
  double rotation = 0.0005;    // per-step sigma, radians
};

struct SegmentationConfig {
  double voxel_side = 0.1;
  std::size_t activation_threshold = 1;
  double ground_threshold = 0.2;
  segmentation::SegmenterParams segmenter{25.0, 0.2, 100, 1.5};
};

struct DescriptorConfig {
  descriptors::Provider provider = descriptors::Provider::segmap;
  std::string model_dir;  // required for learned providers
};

struct LocalizationConfig {
  std::size_t neighbours = 40;
  double epsilon = 0.4;
  std::size_t min_correspondences = 7;
  bool yaw_only = true;
  std::size_t every = 5;         // attempt every n steps per robot, 0 disables
  double local_radius = 25.0;    // query segments around the robot
  double self_exclusion = 10.0;  // own segments younger than this (s) are not matched
  std::set<descriptors::SemanticClass> exclude;
};

/// Descriptor training settings (train, train-ae, train-semantic).
struct TrainingConfig {
  std::string architecture = "desk";  // desk | full | tiny
  int descriptor_dim = 64;
  double dropout = 0.2;
  double alpha = 200.0;
  double gamma = 0.9;
  int epochs = 6;
  int batch = 16;
  double learning_rate = 2e-3;
  std::size_t observations_per_track = 3;
  double val_fraction = 0.1;
  /// Worlds whose segments form the training set; empty uses the scenario seed.
  std::vector<std::uint64_t> worlds;
  int semantic_epochs = 300;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  WorldParams world;
  SensorParams sensor;
  double sensor_height = 1.8;
  double step_length = 1.0;  // metres between scans
  double dt = 0.1;           // seconds between scans
  std::vector<RobotConfig> robots{RobotConfig{}};
  OdometryNoise odometry;
  SegmentationConfig segmentation;
  DescriptorConfig descriptor;
  LocalizationConfig localization;
  TrainingConfig training;
  bool threaded = false;
  bool keep_tracks = false;
};

/// Parses the JSON config text. Unknown keys, bad values and a missing "seed" throw ConfigError.
ScenarioConfig parse_config(const std::string& text);
/// Reads and parses `path`; an unreadable file is a ConfigError. Relative model paths
/// resolve against the config file's directory and must exist.
ScenarioConfig load_config(const std::string& path);
std::string dump_config(const ScenarioConfig& config);
/// Throws ConfigError.
void validate(const ScenarioConfig& config);

/// Architecture named by `training.architecture`; ConfigError for an unknown name.
descriptors::Architecture architecture_of(const TrainingConfig& training);

std::string world_to_json(const SyntheticWorld& world);
/// DataError on malformed input.
SyntheticWorld world_from_json(const std::string& text);

}  // namespace segloc::pipeline
