#include "segloc/descriptors/training.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "segloc/nn/adam.hpp"
#include "segloc/nn/losses.hpp"

namespace segloc::descriptors {

namespace {

struct Dsu {
  std::map<SegmentId, SegmentId> parent;
  SegmentId find(SegmentId a) {
    auto it = parent.find(a);
    if (it == parent.end() || it->second == a) return a;
    return it->second = find(it->second);
  }
  void unite(SegmentId a, SegmentId b) {
    a = find(a), b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<std::size_t> spaced_indices(std::size_t n, std::size_t keep) {
  std::vector<std::size_t> idx;
  if (keep == 0 || keep >= n) {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  for (std::size_t k = 0; k < keep; ++k) idx.push_back((n - 1) - (keep - 1 - k) * (n - 1) / (keep - 1 ? keep - 1 : 1));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::size_t argmax_row(const nn::Tensor& t, int n) {
  const double* r = t.sample(n);
  return static_cast<std::size_t>(std::max_element(r, r + t.shape[1]) - r);
}

bool uses_classifier(TrainMode m) { return m != TrainMode::autoencoder; }
bool uses_decoder(TrainMode m) { return m != TrainMode::classification_only; }

struct BatchOutcome {
  double lc = 0.0, lr = 0.0;
  std::size_t correct = 0;
};

// One forward (and optionally backward) pass over a batch.
BatchOutcome run_batch(DescriptorModel& model, const TrainingSet& set, const std::vector<std::size_t>& idx,
                       const TrainConfig& cfg, nn::Mode mode, bool backward) {
  std::vector<const prep::VoxelizedSegment*> segs;
  std::vector<int> labels;
  for (std::size_t i : idx) {
    segs.push_back(&set.samples[i]);
    labels.push_back(set.labels[i]);
  }
  nn::Tensor grids, scales;
  pack_batch(segs, grids, scales);
  const nn::Tensor d = model.encode(grids, scales, mode);
  nn::Tensor grad_d(d.shape);
  BatchOutcome out;
  if (uses_classifier(cfg.mode)) {
    const nn::Tensor logits = model.classifier().forward(d, mode);
    const auto ce = nn::softmax_cross_entropy(logits, labels);
    out.lc = ce.value;
    for (int n = 0; n < logits.batch(); ++n) out.correct += argmax_row(logits, n) == static_cast<std::size_t>(labels[n]);
    if (backward) {
      const nn::Tensor g = model.classifier().backward(ce.grad);
      for (std::size_t k = 0; k < g.size(); ++k) grad_d.data[k] += g.data[k];
    }
  }
  if (uses_decoder(cfg.mode)) {
    const nn::Tensor recon = model.decoder().forward(d, mode);
    auto bce = nn::weighted_bce(recon, grids, cfg.gamma, cfg.per_voxel_reconstruction);
    out.lr = bce.value;
    if (backward) {
      const double w = cfg.mode == TrainMode::joint ? cfg.alpha : 1.0;
      for (auto& v : bce.grad.data) v *= w;
      const nn::Tensor g = model.decoder().backward(bce.grad);
      for (std::size_t k = 0; k < g.size(); ++k) grad_d.data[k] += g.data[k];
    }
  }
  if (backward) model.encoder().backward(grad_d);
  return out;
}

void check_model_for_mode(DescriptorModel& model, const TrainingSet& set, TrainMode mode) {
  if (uses_classifier(mode)) {
    if (!model.has_classifier()) throw std::invalid_argument("train: mode needs a classifier head");
    if (model.num_classes() != set.num_classes)
      throw std::invalid_argument("train: classifier has " + std::to_string(model.num_classes()) + " outputs for " +
                                  std::to_string(set.num_classes) + " classes");
  }
}

}  // namespace

TrainingSet build_training_set(const std::vector<segmentation::SegmentTrack>& tracks,
                               const std::vector<std::pair<SegmentId, SegmentId>>& same_object,
                               const TrainingSetParams& params) {
  Dsu dsu;
  for (const auto& [a, b] : same_object) dsu.unite(a, b);
  std::map<SegmentId, std::vector<prep::VoxelizedSegment>> by_group;
  std::mt19937_64 rng(params.seed);
  for (const auto& track : tracks) {
    if (track.observations.empty()) continue;
    auto& bucket = by_group[dsu.find(track.id)];
    for (std::size_t oi : spaced_indices(track.observations.size(), params.max_observations_per_track)) {
      const auto& obs = track.observations[oi];
      if (obs.points.empty()) continue;
      const auto aug = prep::augment(obs.points, params.augment, rng);
      const prep::Alignment base = prep::align(obs.points);
      for (const auto& cloud : aug.clouds) {
        prep::VoxelizedSegment v = prep::voxelize(cloud);
        v.centroid = base.centroid;
        v.angle = base.angle;
        v.segment_id = obs.segment_id;
        v.observation_index = obs.index;
        bucket.push_back(std::move(v));
      }
    }
  }
  TrainingSet set;
  for (auto& [group, samples] : by_group) {
    if (samples.size() < params.min_samples) continue;
    for (auto& s : samples) {
      set.samples.push_back(std::move(s));
      set.labels.push_back(set.num_classes);
    }
    ++set.num_classes;
  }
  return set;
}

void validate_training_set(const TrainingSet& set) {
  if (set.samples.size() != set.labels.size()) throw std::invalid_argument("training set: label count mismatch");
  std::vector<std::size_t> counts(std::max(0, set.num_classes), 0);
  for (int l : set.labels) {
    if (l < 0 || l >= set.num_classes) throw std::invalid_argument("training set: label " + std::to_string(l) + " out of range");
    ++counts[l];
  }
  for (int c = 0; c < set.num_classes; ++c)
    if (counts[c] == 0) throw std::invalid_argument("training set: class " + std::to_string(c) + " has no samples");
}

std::pair<TrainingSet, TrainingSet> split_training_set(const TrainingSet& set, double val_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> members(set.num_classes);
  for (std::size_t i = 0; i < set.labels.size(); ++i) members[set.labels[i]].push_back(i);
  TrainingSet train, val;
  train.num_classes = val.num_classes = set.num_classes;
  for (auto& m : members) {
    std::shuffle(m.begin(), m.end(), rng);
    const std::size_t n_val = std::min(m.size() > 0 ? m.size() - 1 : 0,
                                       static_cast<std::size_t>(std::floor(val_fraction * m.size())));
    for (std::size_t k = 0; k < m.size(); ++k) {
      TrainingSet& dst = k < n_val ? val : train;
      dst.samples.push_back(set.samples[m[k]]);
      dst.labels.push_back(set.labels[m[k]]);
    }
  }
  return {std::move(train), std::move(val)};
}

EpochStats evaluate_losses(DescriptorModel& model, const TrainingSet& set, const TrainConfig& config) {
  EpochStats s;
  if (set.samples.empty()) return s;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < set.samples.size(); start += config.batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(set.samples.size(), start + config.batch); ++i) idx.push_back(i);
    const auto r = run_batch(model, set, idx, config, nn::Mode::eval, false);
    s.train_lc += r.lc * idx.size();
    s.train_lr += r.lr * idx.size();
    correct += r.correct;
  }
  s.train_lc /= set.samples.size();
  s.train_lr /= set.samples.size();
  s.train_accuracy = static_cast<double>(correct) / set.samples.size();
  return s;
}

TrainResult train(DescriptorModel& model, const TrainingSet& train_set, const TrainingSet* val_set,
                  const TrainConfig& config) {
  validate_training_set(train_set);
  check_model_for_mode(model, train_set, config.mode);
  if (config.batch <= 0 || config.epochs < 0) throw std::invalid_argument("train: batch and epochs must be positive");

  std::vector<nn::Param*> params = model.encoder().params();
  if (uses_classifier(config.mode))
    for (auto* p : model.classifier().params()) params.push_back(p);
  if (uses_decoder(config.mode))
    for (auto* p : model.decoder().params()) params.push_back(p);
  nn::Adam adam(params, nn::AdamConfig{config.learning_rate});

  TrainResult result;
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5eed5eedULL);
  std::vector<std::size_t> order(train_set.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochStats stats;
    stats.epoch = epoch + 1;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::vector<std::size_t> idx(order.begin() + start,
                                         order.begin() + std::min(order.size(), start + config.batch));
      adam.zero_grad();
      model.encoder().reseed_dropout(config.seed * 1000003ULL + step++);
      const auto r = run_batch(model, train_set, idx, config, nn::Mode::train, true);
      adam.step();
      const double w = config.mode == TrainMode::joint ? config.alpha : 1.0;
      result.steps.push_back({r.lc, r.lr, nn::combined_loss(r.lc, r.lr, w)});
      stats.train_lc += r.lc * idx.size();
      stats.train_lr += r.lr * idx.size();
      correct += r.correct;
    }
    stats.train_lc /= order.size();
    stats.train_lr /= order.size();
    stats.train_accuracy = static_cast<double>(correct) / order.size();
    if (val_set && !val_set->samples.empty()) {
      const auto v = evaluate_losses(model, *val_set, config);
      stats.val_lc = v.train_lc;
      stats.val_lr = v.train_lr;
      stats.val_accuracy = v.train_accuracy;
    }
    result.curves.push_back(stats);
  }
  result.skipped_steps = adam.skipped_steps();
  return result;
}

void write_curves_csv(const std::string& path, const TrainResult& result, double alpha) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,train_Lc,val_Lc,train_Lr_scaled,val_Lr_scaled,accuracy\n";
  for (const auto& e : result.curves)
    out << e.epoch << ',' << e.train_lc << ',' << e.val_lc << ',' << alpha * e.train_lr << ',' << alpha * e.val_lr
        << ',' << e.train_accuracy << '\n';
}

SemanticReport train_semantic(DescriptorModel& model, const std::vector<Descriptor>& descriptors,
                              const std::vector<SemanticClass>& labels, const SemanticConfig& config) {
  if (descriptors.size() != labels.size() || descriptors.empty())
    throw std::invalid_argument("train_semantic: need one label per descriptor");
  const int dim = model.descriptor_dim();
  for (const auto& d : descriptors)
    if (static_cast<int>(d.values.size()) != dim) throw std::invalid_argument("train_semantic: descriptor dimension mismatch");
  for (auto l : labels)
    if (static_cast<int>(l) >= kSemanticClasses) throw std::invalid_argument("train_semantic: unknown label");

  model.reset_semantic_head(config.seed);
  std::mt19937_64 rng(config.seed + 99);
  std::vector<std::size_t> order(descriptors.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(config.train_fraction * order.size())));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + std::min(n_train, order.size()));
  std::vector<std::size_t> val_idx(order.begin() + train_idx.size(), order.end());

  auto make_batch = [&](const std::vector<std::size_t>& idx, nn::Tensor& x, std::vector<int>& y) {
    x = nn::Tensor({static_cast<int>(idx.size()), dim});
    y.clear();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::copy(descriptors[idx[k]].values.begin(), descriptors[idx[k]].values.end(), x.sample(static_cast<int>(k)));
      y.push_back(static_cast<int>(labels[idx[k]]));
    }
  };
  auto accuracy = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    nn::Tensor x;
    std::vector<int> y;
    make_batch(idx, x, y);
    const nn::Tensor logits = model.semantic_head().forward(x, nn::Mode::eval);
    std::size_t ok = 0;
    for (int n = 0; n < logits.batch(); ++n) ok += argmax_row(logits, n) == static_cast<std::size_t>(y[n]);
    return static_cast<double>(ok) / idx.size();
  };

  SemanticReport report;
  report.train_count = train_idx.size();
  report.val_count = val_idx.size();
  {
    nn::Tensor x;
    std::vector<int> y;
    make_batch(train_idx, x, y);
    report.initial_loss = nn::softmax_cross_entropy(model.semantic_head().forward(x, nn::Mode::eval), y).value;
  }
  nn::Adam adam(model.semantic_head().params(), nn::AdamConfig{config.learning_rate});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    for (std::size_t start = 0; start < train_idx.size(); start += config.batch) {
      const std::vector<std::size_t> idx(train_idx.begin() + start,
                                         train_idx.begin() + std::min(train_idx.size(), start + config.batch));
      nn::Tensor x;
      std::vector<int> y;
      make_batch(idx, x, y);
      adam.zero_grad();
      const auto ce = nn::softmax_cross_entropy(model.semantic_head().forward(x, nn::Mode::train), y);
      model.semantic_head().backward(ce.grad);
      adam.step();
    }
  }
  report.train_accuracy = accuracy(train_idx);
  report.val_accuracy = accuracy(val_idx);
  return report;
}

}  // namespace segloc::descriptors
