#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "segloc/descriptors/model.hpp"
#include "segloc/descriptors/training.hpp"
#include "segloc/eval/metrics.hpp"
#include "segloc/pipeline/config.hpp"
#include "segloc/pipeline/io.hpp"
#include "segloc/pipeline/world.hpp"

namespace segloc::pipeline {

struct SegmentDataset {
  std::vector<segmentation::SegmentTrack> tracks;  // world frame, merged-away tracks dropped
  std::map<segmentation::SegmentId, SegmentLabel> labels;
};

/// Plays the scenario with localization off and the eigen provider, keeping every
/// segment observation. Each robot's tracks are moved to the world frame through
/// its true start pose, so odometry noise should be zero for clean data.
SegmentDataset collect_segments(ScenarioConfig config, const SyntheticWorld& world);

struct TrainingSegments {
  SegmentDataset data;
  std::vector<std::pair<segmentation::SegmentId, segmentation::SegmentId>> same_object;
};

/// Segments of every `training.worlds` entry (the scenario seed when empty), played
/// with noise-free odometry. Ids are offset by the world's position << 40; classes
/// come from hull-IoU correspondences inside each world.
TrainingSegments collect_training_segments(const ScenarioConfig& config);

descriptors::TrainingSet build_training_data(const TrainingSegments& segments, const TrainingConfig& training,
                                             std::uint64_t seed);
descriptors::TrainConfig train_config_of(const TrainingConfig& training, descriptors::TrainMode mode,
                                         std::uint64_t seed);

/// Descriptor values for a batch of observations; nullopt marks a degenerate one.
using Describer = std::function<std::vector<std::optional<std::vector<double>>>(
    const std::vector<const segmentation::SegmentObservation*>&)>;

Describer eigen_describer();
Describer model_describer(descriptors::DescriptorModel& model);

/// Descriptor distance of every pair; pairs touching a degenerate observation
/// score +infinity.
std::vector<eval::ScoredPair> score_pairs(const std::vector<eval::ObservationPair>& pairs,
                                          const std::vector<segmentation::SegmentTrack>& tracks,
                                          const Describer& describe);

}  // namespace segloc::pipeline
