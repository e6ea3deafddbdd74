// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "segloc/descriptors/model.hpp"
#include "segloc/descriptors/training.hpp"
#include "segloc/eval/metrics.hpp"
#include "segloc/localization/pose_graph.hpp"
#include "segloc/localization/verification.hpp"
#include "segloc/nn/layers.hpp"
#include "segloc/nn/losses.hpp"
#include "segloc/pipeline/dataset.hpp"
#include "segloc/pipeline/simulation.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/shapes.hpp"

using namespace segloc;
using namespace segloc::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1: finite differences over every layer kind and both losses

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  double worst = 0.0;
  std::string where;
  auto run = [&](const std::string& name, nn::Sequential& net, const nn::Tensor& x) {
    net.init(rng);
    const auto r = check_network(net, x, rng);
    if (r.max_rel_error >= worst) worst = r.max_rel_error, where = name + " " + r.worst;
  };
  {
    nn::Sequential n;
    n.add<nn::Conv3d>(2, 3);
    run("conv3d", n, random_tensor({2, 2, 4, 3, 2}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::Deconv3d>(3, 2);
    run("deconv3d", n, random_tensor({2, 3, 2, 2, 3}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::MaxPool3d>();
    run("maxpool3d", n, separated_tensor({2, 2, 4, 4, 2}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::Dense>(5, 4);
    run("dense", n, random_tensor({3, 5}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::Relu>();
    run("relu", n, separated_tensor({3, 7}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::Sigmoid>();
    run("sigmoid", n, random_tensor({3, 7}, rng, -4, 4));
  }
  {
    nn::Sequential n;
    n.add<nn::BatchNorm>(3);
    run("batchnorm", n, random_tensor({2, 3, 2, 2, 2}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::Dropout>(0.5);
    run("dropout", n, random_tensor({4, 9}, rng));
  }
  {
    nn::Sequential n;
    n.add<nn::Flatten>();
    n.add<nn::ConcatScale>(3).set_side(nn::Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    n.add<nn::Dense>(2 * 2 * 2 * 2 + 3, 8);
    n.add<nn::Reshape>(nn::Shape{1, 2, 2, 2});
    n.add<nn::Conv3d>(1, 1);
    run("flatten+concat+reshape", n, random_tensor({2, 2, 2, 2, 2}, rng));
  }

  nn::Tensor logits = random_tensor({3, 5}, rng, -3, 3);
  const std::vector<int> labels{4, 0, 2};
  GradCheckReport ce;
  check_entries(logits.data, nn::softmax_cross_entropy(logits, labels).grad.data,
                [&] { return nn::softmax_cross_entropy(logits, labels).value; }, "ce", ce);
  nn::Tensor out = random_tensor({2, 10}, rng, 0.05, 0.95);
  nn::Tensor target({2, 10});
  for (std::size_t i = 0; i < target.size(); ++i) target.data[i] = i % 3 == 0;
  GradCheckReport bce;
  check_entries(out.data, nn::weighted_bce(out, target, 0.9).grad.data,
                [&] { return nn::weighted_bce(out, target, 0.9).value; }, "bce", bce);
  for (const auto* r : {&ce, &bce})
    if (r->max_rel_error >= worst) worst = r->max_rel_error, where = r->worst;

  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0, fmt("max rel error %.2e (%s), %.1f s", worst, where.c_str(), secs)};
}

// ---- 2: loss closed forms

Outcome losses() {
  const int classes = 37;
  const nn::Tensor uniform({1, classes}, std::vector<double>(classes, 0.3));
  const double lc = nn::softmax_cross_entropy(uniform, {11}).value;
  const double lc_err = std::abs(lc - std::log(static_cast<double>(classes)));

  const nn::Tensor o({1, 32, 32, 16}, 0.5), t({1, 32, 32, 16}, 0.0);
  const double lr = nn::weighted_bce(o, t, 0.9).value;
  const double lr_expected = 16384.0 * 0.1 * std::log(2.0);
  const double lr_err = std::abs(lr - lr_expected);

  const double combined = nn::combined_loss(lc, lr, 200.0);
  const double comb_err = std::abs(combined - (lc + 200.0 * lr));
  return {lc_err <= 1e-9 && lr_err <= 1e-9 && comb_err <= 1e-9 * combined,
          fmt("Lc-lnN %.1e, Lr %.9f vs %.9f, combined err %.1e", lc_err, lr, lr_expected, comb_err)};
}

// ---- 3: compression arithmetic

Outcome compression() {
  const auto r = eval::compression_from_totals(16.8e6, 386.2e3, 1341, 284);
  if (!r.ratio || !r.ratio_excl) return {false, "undefined ratio"};
  const bool ok = std::abs(*r.ratio - 43.5) <= 0.01 * 43.5 && std::abs(*r.ratio_excl - 55.2) <= 0.01 * 55.2;
  return {ok, fmt("ratio %.2f, with exclusion %.2f", *r.ratio, *r.ratio_excl)};
}

// ---- 4: retrieval

pipeline::ScenarioConfig retrieval_scenario(std::uint64_t seed, double arc) {
  pipeline::ScenarioConfig c;
  c.seed = seed;
  c.robots = {pipeline::RobotConfig{0.0, arc, false, true}};
  c.odometry = {0.0, 0.0};
  c.sensor.noise = 0.01;
  return c;
}

Outcome retrieval() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<segmentation::SegmentTrack> tracks;
  std::vector<std::pair<segmentation::SegmentId, segmentation::SegmentId>> same;
  for (std::uint64_t k = 0; k < 8; ++k) {
    const auto c = retrieval_scenario(101 + k, 4.0 * std::numbers::pi);
    const auto world = pipeline::generate_world(c.seed, c.world);
    auto d = pipeline::collect_segments(c, world);
    const auto offset = k << 40;
    for (const auto& p : eval::generate_correspondences(d.tracks).pairs) same.push_back({p.a + offset, p.b + offset});
    for (auto& t : d.tracks) {
      t.id += offset;
      for (auto& o : t.observations) o.segment_id = t.id;
      tracks.push_back(std::move(t));
    }
  }
  descriptors::TrainingSetParams tp;
  tp.max_observations_per_track = 3;
  tp.augment.rotations = 0;
  tp.seed = 3;
  const auto set = descriptors::build_training_set(tracks, same, tp);
  auto arch = descriptors::Architecture::desk(64);
  arch.dropout = 0.2;
  descriptors::DescriptorModel model(descriptors::Provider::segmap, arch, set.num_classes, 7);
  descriptors::TrainConfig tc;
  tc.epochs = 6;
  tc.batch = 16;
  tc.learning_rate = 2e-3;
  tc.seed = 2;
  const auto [train_set, val_set] = descriptors::split_training_set(set, 0.1, 5);
  descriptors::train(model, train_set, &val_set, tc);

  const auto c = retrieval_scenario(202, 4.0 * std::numbers::pi);
  const auto world = pipeline::generate_world(c.seed, c.world);
  const auto d = pipeline::collect_segments(c, world);
  eval::RocPairParams rp;
  rp.negatives_per_positive = 20;
  rp.seed = 1;
  const auto pairs = eval::build_roc_pairs(eval::generate_correspondences(d.tracks).pairs, d.tracks, rp);
  const double learned = eval::roc(pipeline::score_pairs(pairs, d.tracks, pipeline::model_describer(model))).auc;
  const double eigen = eval::roc(pipeline::score_pairs(pairs, d.tracks, pipeline::eigen_describer())).auc;
  const double secs = seconds_since(t0);
  return {learned >= 0.85 && learned >= eigen + 0.02 && secs <= 900.0,
          fmt("auc learned %.4f, eigen %.4f, %zu pairs, %zu training classes, %.0f s", learned, eigen, pairs.size(),
              static_cast<std::size_t>(set.num_classes), secs)};
}

// ---- 5: reconstruction quality

double mean_reconstruction(descriptors::DescriptorModel& m, const descriptors::TrainingSet& set) {
  double sum = 0.0;
  for (const auto& v : set.samples) {
    const auto rec = m.reconstruct(m.describe(v));
    const auto orig = prep::devoxelize(v, std::vector<double>(v.occupancy.begin(), v.occupancy.end()));
    sum += eval::reconstruction_ratio(orig, rec.points, v.voxel_sides).ratio;
  }
  return sum / set.samples.size();
}

Outcome reconstruction() {
  descriptors::TrainingSetParams p;
  p.augment.rotations = 0;
  p.seed = 6;
  const auto set = descriptors::build_training_set(shape_tracks(20, 8, 6), {}, p);
  double ratio[2];
  for (int ae = 0; ae < 2; ++ae) {
    auto arch = descriptors::Architecture::desk();
    arch.dropout = 0.2;
    descriptors::DescriptorModel m(ae ? descriptors::Provider::autoencoder : descriptors::Provider::segmap, arch,
                                   ae ? 0 : set.num_classes, 7);
    descriptors::TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch = 16;
    cfg.learning_rate = 2e-3;
    cfg.seed = 2;
    if (ae) cfg.mode = descriptors::TrainMode::autoencoder;
    descriptors::train(m, set, nullptr, cfg);
    ratio[ae] = mean_reconstruction(m, set);
  }
  return {ratio[0] >= 0.85 && ratio[1] >= ratio[0],
          fmt("learned %.3f, autoencoder %.3f over %zu samples", ratio[0], ratio[1], set.samples.size())};
}

// ---- 6: two-robot localization and negative control

pipeline::ScenarioConfig two_robot_scenario(std::uint64_t seed) {
  pipeline::ScenarioConfig c;
  c.seed = seed;
  c.descriptor.provider = descriptors::Provider::eigen;
  c.robots = {pipeline::RobotConfig{0.0, 3.6, false, true}, pipeline::RobotConfig{1.6, 3.6, true, true}};
  return c;
}

Outcome localization_accuracy() {
  std::size_t hits = 0;
  double worst = 0.0;
  std::ostringstream os;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto c = two_robot_scenario(seed);
    const auto r = pipeline::run_multi_robot(c, pipeline::generate_world(seed, c.world), nullptr);
    if (r.error) return {false, "seed " + std::to_string(seed) + ": " + *r.error};
    hits += r.localizations.size();
    for (const auto& e : r.localizations) worst = std::max(worst, e.translation_error);
    os << " s" << seed << "=" << r.localizations.size();
  }
  std::size_t false_hits = 0, attempts = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    pipeline::ScenarioConfig c;
    c.seed = seed;
    c.descriptor.provider = descriptors::Provider::eigen;
    c.robots = {pipeline::RobotConfig{0.0, 4.4, false, true}};
    const auto r = pipeline::run_multi_robot(c, pipeline::generate_world(seed, c.world), nullptr);
    if (r.error) return {false, "control seed " + std::to_string(seed) + ": " + *r.error};
    false_hits += r.localizations.size();
    attempts += r.verification_attempts;
  }
  return {hits >= 1 && worst <= 0.5 && false_hits == 0,
          fmt("%zu localizations (%s ), max error %.3f m; control %zu localizations in %zu attempts", hits,
              os.str().c_str(), worst, false_hits, attempts)};
}

// ---- 7: oracles

Outcome oracles() {
  std::size_t seg_ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) seg_ok += segmentation_matches_oracle(seed);

  std::mt19937_64 rng(7);
  std::size_t clique_ok = 0;
  const std::size_t clique_n = 300;
  for (std::size_t t = 0; t < clique_n; ++t) {
    const std::size_t n = 1 + rng() % 15;
    const auto c = random_candidates(rng, n, rng() % (n + 1));
    const auto r = localization::max_consistent_set(c, 0.4);
    clique_ok += r.exact && r.members.size() == exhaustive_max(c, 0.4) && pairwise_consistent(c, r.members, 0.4);
  }

  std::mt19937_64 hr(21);
  std::uniform_real_distribution<double> rad(0.6, 2.0), off(-1.0, 1.0);
  double worst_iou = 0.0;
  for (int t = 0; t < 20; ++t) {
    const geom::Point3 cb(off(hr), off(hr), 0.5 * off(hr));
    const auto a = geom::convex_hull(random_blob(hr, geom::Point3::Zero(), geom::Point3(rad(hr), rad(hr), rad(hr)), 40));
    const auto b = geom::convex_hull(random_blob(hr, cb, geom::Point3(rad(hr), rad(hr), rad(hr)), 40));
    const auto raster = eval::hull_iou(a, b, 0.1);
    worst_iou = std::max(worst_iou, raster ? std::abs(*raster - monte_carlo_iou(a, b, 1000000, 1234 + t)) : 1.0);
  }
  return {seg_ok == 50 && clique_ok == clique_n && worst_iou <= 0.03,
          fmt("segmentation %zu/50, clique %zu/%zu, iou max deviation %.4f", seg_ok, clique_ok, clique_n, worst_iou)};
}

// ---- 8: pose graph

Outcome pose_graph() {
  const auto truth = circle_poses(40, 10.0);
  auto g = noisy_circle_graph(truth, 11);
  const double before = position_rmse(g, truth);
  g.add_loop(39, 0, truth[39].inverse() * truth[0]);
  const auto rep = localization::optimize_pose_graph(g);
  const double after = position_rmse(g, truth);
  bool monotone = true;
  for (std::size_t i = 1; i < rep.accepted_costs.size(); ++i)
    monotone = monotone && rep.accepted_costs[i] <= rep.accepted_costs[i - 1];
  return {after <= 0.5 * before && monotone,
          fmt("rmse %.3f -> %.3f m (%.0f%% reduction), monotone cost %s", before, after,
              100.0 * (1.0 - after / before), monotone ? "yes" : "no")};
}

// ---- 9: reproducibility

Outcome reproducibility() {
  const auto base = fs::temp_directory_path() / ("segloc_acceptance_" + std::to_string(::getpid()));
  std::uint64_t sums[2];
  std::size_t counts[2];
  for (int run = 0; run < 2; ++run) {
    const auto c = two_robot_scenario(1);
    const auto r = pipeline::run_multi_robot(c, pipeline::generate_world(c.seed, c.world), nullptr);
    const auto dir = base / std::to_string(run);
    fs::create_directories(dir);
    pipeline::write_artifacts(r, c, dir.string(), nullptr);
    sums[run] = pipeline::file_checksum((dir / "map.smap").string());
    counts[run] = r.localizations.size();
  }
  fs::remove_all(base);
  return {sums[0] == sums[1] && counts[0] == counts[1],
          fmt("map checksums %016llx / %016llx, localizations %zu / %zu", static_cast<unsigned long long>(sums[0]),
              static_cast<unsigned long long>(sums[1]), counts[0], counts[1])};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradients", gradients},
      {"loss closed forms", losses},
      {"compression ratios", compression},
      {"retrieval auc", retrieval},
      {"reconstruction", reconstruction},
      {"localization", localization_accuracy},
      {"oracles", oracles},
      {"pose graph", pose_graph},
      {"reproducibility", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
