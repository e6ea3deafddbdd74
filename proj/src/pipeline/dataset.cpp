#include "segloc/pipeline/dataset.hpp"

#include <limits>
#include <stdexcept>

#include "segloc/descriptors/eigen_features.hpp"
#include "segloc/pipeline/simulation.hpp"
#include "segloc/prep/voxelize.hpp"

namespace segloc::pipeline {

SegmentDataset collect_segments(ScenarioConfig config, const SyntheticWorld& world) {
  config.descriptor.provider = descriptors::Provider::eigen;
  config.localization.every = 0;
  config.keep_tracks = true;
  const auto run = run_multi_robot(config, world, nullptr);
  if (run.error) throw std::runtime_error("segment collection failed: " + *run.error);
  SegmentDataset out;
  for (std::size_t r = 0; r < run.tracks.size(); ++r) {
    if (run.truth[r].empty()) continue;
    const RigidTransform to_world = run.truth[r].front().pose;
    for (auto t : run.tracks[r]) {
      if (t.merged_into || t.observations.empty()) continue;
      for (auto& o : t.observations) {
        o.points = to_world.apply(o.points);
        o.centroid = to_world.apply(o.centroid);
      }
      out.tracks.push_back(std::move(t));
    }
  }
  out.labels = label_tracks(out.tracks, world, RigidTransform::identity());
  return out;
}

TrainingSegments collect_training_segments(const ScenarioConfig& config) {
  std::vector<std::uint64_t> seeds = config.training.worlds;
  if (seeds.empty()) seeds.push_back(config.seed);
  TrainingSegments out;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    ScenarioConfig c = config;
    c.seed = seeds[k];
    c.odometry = {0.0, 0.0};
    const auto world = generate_world(c.seed, c.world);
    auto d = collect_segments(c, world);
    const SegmentId offset = static_cast<SegmentId>(k) << 40;
    for (const auto& p : eval::generate_correspondences(d.tracks).pairs)
      out.same_object.emplace_back(p.a + offset, p.b + offset);
    for (auto& t : d.tracks) {
      t.id += offset;
      for (auto& o : t.observations) o.segment_id = t.id;
      out.data.tracks.push_back(std::move(t));
    }
    for (const auto& [id, l] : d.labels) out.data.labels[id + offset] = l;
  }
  return out;
}

descriptors::TrainingSet build_training_data(const TrainingSegments& segments, const TrainingConfig& training,
                                             std::uint64_t seed) {
  descriptors::TrainingSetParams p;
  p.max_observations_per_track = training.observations_per_track;
  p.seed = seed;
  return descriptors::build_training_set(segments.data.tracks, segments.same_object, p);
}

descriptors::TrainConfig train_config_of(const TrainingConfig& t, descriptors::TrainMode mode, std::uint64_t seed) {
  descriptors::TrainConfig c;
  c.mode = mode;
  c.alpha = t.alpha;
  c.gamma = t.gamma;
  c.epochs = t.epochs;
  c.batch = t.batch;
  c.learning_rate = t.learning_rate;
  c.seed = seed;
  return c;
}

Describer eigen_describer() {
  return [](const std::vector<const segmentation::SegmentObservation*>& obs) {
    std::vector<std::optional<std::vector<double>>> out;
    for (const auto* o : obs) {
      auto d = descriptors::describe_eigen(*o);
      out.push_back(d ? std::optional(std::move(d->values)) : std::nullopt);
    }
    return out;
  };
}

Describer model_describer(descriptors::DescriptorModel& model) {
  return [&model](const std::vector<const segmentation::SegmentObservation*>& obs) {
    std::vector<std::optional<std::vector<double>>> out(obs.size());
    std::vector<prep::VoxelizedSegment> grids;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      auto v = prep::prepare(*obs[i]);
      if (v.occupied() == 0) continue;
      grids.push_back(std::move(v));
      where.push_back(i);
    }
    const auto ds = model.describe(grids);
    for (std::size_t i = 0; i < ds.size(); ++i) out[where[i]] = ds[i].values;
    return out;
  };
}

std::vector<eval::ScoredPair> score_pairs(const std::vector<eval::ObservationPair>& pairs,
                                          const std::vector<segmentation::SegmentTrack>& tracks,
                                          const Describer& describe) {
  std::map<segmentation::SegmentId, const segmentation::SegmentTrack*> by_id;
  for (const auto& t : tracks) by_id[t.id] = &t;
  std::map<eval::ObservationRef, std::size_t> slot;
  std::vector<const segmentation::SegmentObservation*> obs;
  auto lookup = [&](const eval::ObservationRef& r) {
    auto [it, fresh] = slot.emplace(r, obs.size());
    if (fresh) {
      auto t = by_id.find(r.track);
      if (t == by_id.end() || r.observation >= t->second->observations.size())
        throw std::out_of_range("score_pairs: unknown observation");
      obs.push_back(&t->second->observations[r.observation]);
    }
  };
  for (const auto& p : pairs) {
    lookup(p.a);
    lookup(p.b);
  }
  const auto values = describe(obs);
  std::vector<eval::ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& a = values[slot.at(p.a)];
    const auto& b = values[slot.at(p.b)];
    const double d = a && b ? descriptors::l2_distance(*a, *b) : std::numeric_limits<double>::infinity();
    out.push_back({d, p.positive});
  }
  return out;
}

}  // namespace segloc::pipeline
