#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "segloc/descriptors/model.hpp"
#include "segloc/prep/voxelize.hpp"

namespace segloc::descriptors {

/// Voxelized samples with dense class labels 0..N-1.
struct TrainingSet {
  std::vector<prep::VoxelizedSegment> samples;
  std::vector<int> labels;
  int num_classes = 0;
};

struct TrainingSetParams {
  prep::AugmentParams augment{0, 6.283185307179586, 0, 20, 0.5};
  std::size_t min_samples = 3;
  /// Evenly spaced observations per track, always including the last; 0 keeps all.
  std::size_t max_observations_per_track = 0;
  std::uint64_t seed = 0;
};

/// One class per group of tracks linked through `same_object` pairs (one per track
/// when empty). Classes with fewer than `min_samples` samples are dropped.
TrainingSet build_training_set(const std::vector<segmentation::SegmentTrack>& tracks,
                               const std::vector<std::pair<SegmentId, SegmentId>>& same_object,
                               const TrainingSetParams& params);

/// Throws std::invalid_argument for labels outside 0..N-1 or an empty class.
void validate_training_set(const TrainingSet& set);

/// Per-class split; every class keeps at least one training sample.
std::pair<TrainingSet, TrainingSet> split_training_set(const TrainingSet& set, double val_fraction, std::uint64_t seed);

enum class TrainMode { joint, classification_only, autoencoder };

struct TrainConfig {
  TrainMode mode = TrainMode::joint;
  double alpha = 200.0;
  double gamma = 0.9;
  int epochs = 60;
  int batch = 32;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  /// Reconstruction loss averaged over the grid cells instead of summed.
  bool per_voxel_reconstruction = true;
};

struct EpochStats {
  int epoch = 0;
  double train_lc = 0.0, val_lc = 0.0;
  double train_lr = 0.0, val_lr = 0.0;
  double train_accuracy = 0.0, val_accuracy = 0.0;
};

struct StepLog {
  double lc = 0.0, lr = 0.0, total = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curves;
  std::vector<StepLog> steps;
  std::size_t skipped_steps = 0;
};

/// Adam over the heads the mode uses; `val` may be null.
TrainResult train(DescriptorModel& model, const TrainingSet& train_set, const TrainingSet* val_set,
                  const TrainConfig& config);

/// Eval-mode losses and accuracy over a whole set.
EpochStats evaluate_losses(DescriptorModel& model, const TrainingSet& set, const TrainConfig& config);

/// epoch,train_Lc,val_Lc,train_Lr_scaled,val_Lr_scaled,accuracy
void write_curves_csv(const std::string& path, const TrainResult& result, double alpha);

struct SemanticConfig {
  int epochs = 300;
  int batch = 32;
  double learning_rate = 1e-3;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

struct SemanticReport {
  double initial_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::size_t train_count = 0, val_count = 0;
};

/// Trains a fresh semantic head on frozen descriptors; the encoder is never touched.
SemanticReport train_semantic(DescriptorModel& model, const std::vector<Descriptor>& descriptors,
                              const std::vector<SemanticClass>& labels, const SemanticConfig& config);

}  // namespace segloc::descriptors
