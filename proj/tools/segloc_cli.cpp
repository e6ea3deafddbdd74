#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "segloc/descriptors/eigen_features.hpp"
#include "segloc/pipeline/dataset.hpp"
#include "segloc/pipeline/simulation.hpp"
#include "segloc/prep/voxelize.hpp"

namespace fs = std::filesystem;
using namespace segloc;
using namespace segloc::pipeline;
using descriptors::DescriptorModel;
using segmentation::SegmentTrack;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = ".";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Seed (overrides the config)");
  app->add_option("--config", c.config, "Scenario config (JSON)");
  app->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
}

// Without a config file the defaults apply, with the eigen provider.
ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else {
    if (!c.seed) throw ConfigError("a seed is required: pass --seed or --config");
    cfg.descriptor.provider = descriptors::Provider::eigen;
  }
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg);
  fs::create_directories(c.out_dir);
  return cfg;
}

std::string out_path(const Common& c, const std::string& name) { return (fs::path(c.out_dir) / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DescriptorModel load_model(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "model.json")) throw ConfigError("no model at " + dir);
  try {
    return DescriptorModel::load(dir);
  } catch (const std::exception& e) {
    throw DataError(std::string("model ") + dir + ": " + e.what());
  }
}

localization::GlobalSegmentMap load_map(const std::string& path) {
  if (!fs::exists(path)) throw DataError("cannot open " + path);
  try {
    return localization::read_map_file(path);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

SyntheticWorld world_for(const ScenarioConfig& cfg, const std::string& world_file) {
  if (world_file.empty()) return generate_world(cfg.seed, cfg.world);
  return world_from_json(slurp(world_file));
}

std::vector<SegmentTrack> tracks_for(const ScenarioConfig& cfg, const std::string& tracks_file) {
  if (!tracks_file.empty()) return read_tracks_csv(tracks_file);
  return collect_segments(cfg, generate_world(cfg.seed, cfg.world)).tracks;
}

void print_rows(const std::vector<std::pair<std::string, double>>& rows) {
  for (const auto& [k, v] : rows) std::printf("%s,%.6g\n", k.c_str(), v);
}

// ---- generate-world

void cmd_generate_world(const Common& c, std::size_t scans) {
  const auto cfg = resolve(c);
  const auto world = generate_world(cfg.seed, cfg.world);
  std::ofstream(out_path(c, "world.json")) << world_to_json(world);
  std::printf("objects,%zu\n", world.objects.size());
  if (scans == 0) return;
  const auto traj = scenario_trajectories(cfg).front();
  fs::create_directories(fs::path(c.out_dir) / "scans");
  std::ofstream poses(out_path(c, "poses.csv"));
  poses << "scan,time,x,y,z,yaw\n";
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t i = 0; i < std::min(scans, traj.size()); ++i) {
    const auto& p = traj[i].pose;
    const auto scan = render_scan(world, p, cfg.sensor, rng);
    char name[32];
    std::snprintf(name, sizeof name, "scan_%04zu.csv", i);
    write_cloud_csv((fs::path(c.out_dir) / "scans" / name).string(), p.apply(scan.points));
    poses << i << ',' << traj[i].time << ',' << p.translation().x() << ',' << p.translation().y() << ','
          << p.translation().z() << ',' << p.yaw() << '\n';
  }
}

// ---- segment

std::vector<SegmentTrack> segment_clouds(const ScenarioConfig& cfg, const std::vector<std::string>& files) {
  geom::DynamicVoxelGrid grid(cfg.segmentation.voxel_side, cfg.segmentation.activation_threshold);
  segmentation::IncrementalSegmenter segmenter(cfg.segmentation.segmenter);
  std::map<segmentation::SegmentId, SegmentTrack> tracks;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto raw = read_cloud(files[i]);
    const Point3 position = geom::centroid(raw);
    const auto cloud =
        segmentation::remove_ground(raw, RigidTransform::identity(), cfg.segmentation.ground_threshold);
    const auto inserted = grid.insert_cloud(cloud, RigidTransform::identity());
    for (auto& obs : segmenter.grow(grid, inserted.updated_active, position, static_cast<double>(i))) {
      auto& t = tracks[obs.segment_id];
      t.id = obs.segment_id;
      t.observations.push_back(std::move(obs));
    }
    for (const auto& [absorbed, survivor] : segmenter.take_merges())
      if (tracks.count(absorbed)) tracks[absorbed].merged_into = survivor;
  }
  std::vector<SegmentTrack> out;
  for (auto& [id, t] : tracks)
    if (!t.merged_into) out.push_back(std::move(t));
  return out;
}

void cmd_segment(const Common& c, const std::string& world_file, const std::vector<std::string>& clouds) {
  const auto cfg = resolve(c);
  std::vector<SegmentTrack> tracks;
  if (!clouds.empty()) {
    tracks = segment_clouds(cfg, clouds);
  } else {
    const auto world = world_for(cfg, world_file);
    auto data = collect_segments(cfg, world);
    write_labels_csv(out_path(c, "labels.csv"), data.labels);
    tracks = std::move(data.tracks);
  }
  write_tracks_csv(out_path(c, "tracks.csv"), tracks);
  std::size_t observations = 0;
  for (const auto& t : tracks) observations += t.observations.size();
  std::printf("tracks,%zu\nobservations,%zu\n", tracks.size(), observations);
}

// ---- train / train-ae

void cmd_train(const Common& c, descriptors::TrainMode mode) {
  const auto cfg = resolve(c);
  const auto segments = collect_training_segments(cfg);
  const auto set = build_training_data(segments, cfg.training, cfg.seed);
  if (set.num_classes < 2) throw DataError("training data has fewer than two classes");
  const auto [train_set, val_set] = descriptors::split_training_set(set, cfg.training.val_fraction, cfg.seed);
  const auto provider =
      mode == descriptors::TrainMode::autoencoder ? descriptors::Provider::autoencoder : descriptors::Provider::segmap;
  DescriptorModel model(provider, architecture_of(cfg.training), set.num_classes, cfg.seed);
  const auto tc = train_config_of(cfg.training, mode, cfg.seed);
  const auto result = descriptors::train(model, train_set, &val_set, tc);
  const auto dir = out_path(c, "model");
  model.save(dir);
  descriptors::write_curves_csv(out_path(c, "curves.csv"), result, mode == descriptors::TrainMode::joint ? tc.alpha : 1.0);
  std::printf("tracks,%zu\nsamples,%zu\nclasses,%d\n", segments.data.tracks.size(), set.samples.size(),
              set.num_classes);
  if (!result.curves.empty()) {
    const auto& e = result.curves.back();
    std::printf("train_Lc,%.6g\ntrain_Lr,%.6g\ntrain_accuracy,%.4f\nval_accuracy,%.4f\n", e.train_lc, e.train_lr,
                e.train_accuracy, e.val_accuracy);
  }
  std::printf("model,%s\n", dir.c_str());
}

// ---- train-semantic

void cmd_train_semantic(const Common& c, const std::string& model_dir) {
  const auto cfg = resolve(c);
  auto model = load_model(model_dir);
  const auto segments = collect_training_segments(cfg);
  std::vector<descriptors::Descriptor> ds;
  std::vector<SemanticClass> labels;
  for (const auto& t : segments.data.tracks) {
    auto it = segments.data.labels.find(t.id);
    if (it == segments.data.labels.end()) continue;
    const auto v = prep::prepare(t.last());
    if (v.occupied() == 0) continue;
    ds.push_back(model.describe(v));
    labels.push_back(it->second.label);
  }
  if (ds.empty()) throw DataError("no labelled segments to train on");
  descriptors::SemanticConfig sc;
  sc.epochs = cfg.training.semantic_epochs;
  sc.seed = cfg.seed;
  const auto report = descriptors::train_semantic(model, ds, labels, sc);
  model.save(out_path(c, "model"));
  std::printf("segments,%zu\ninitial_loss,%.6g\ntrain_accuracy,%.4f\nval_accuracy,%.4f\n", ds.size(),
              report.initial_loss, report.train_accuracy, report.val_accuracy);
}

// ---- describe

void cmd_describe(const Common& c, const std::string& model_dir, const std::string& tracks_file) {
  const auto cfg = resolve(c);
  const auto tracks = tracks_for(cfg, tracks_file);
  std::optional<DescriptorModel> model;
  if (!model_dir.empty()) model.emplace(load_model(model_dir));
  std::vector<descriptors::Descriptor> out;
  std::size_t skipped = 0;
  for (const auto& t : tracks)
    for (const auto& obs : t.observations) {
      std::optional<descriptors::Descriptor> d;
      if (model) {
        const auto v = prep::prepare(obs);
        if (v.occupied() > 0) d = model->describe(v);
      } else {
        d = descriptors::describe_eigen(obs);
      }
      if (!d) {
        ++skipped;
        continue;
      }
      d->segment_id = t.id;
      d->observation_index = obs.index;
      d->centroid = obs.centroid;
      out.push_back(std::move(*d));
    }
  write_descriptors_csv(out_path(c, "descriptors.csv"), out);
  std::printf("descriptors,%zu\ndegenerate,%zu\n", out.size(), skipped);
}

// ---- evaluate

struct EvalOptions {
  std::string model_dir, tracks_file, map_file;
  std::size_t negatives = 20;
  std::vector<std::string> exclude;
  std::optional<double> raw_bytes, compressed_bytes;
  std::optional<std::size_t> segments, excluded;
  int dim = 64;
};

void cmd_roc(const Common& c, const EvalOptions& o) {
  const auto cfg = resolve(c);
  const auto tracks = tracks_for(cfg, o.tracks_file);
  const auto corr = eval::generate_correspondences(tracks);
  eval::RocPairParams rp;
  rp.negatives_per_positive = o.negatives;
  rp.seed = cfg.seed;
  std::vector<eval::ObservationPair> pairs;
  try {
    pairs = eval::build_roc_pairs(corr.pairs, tracks, rp);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  const auto eigen = eval::roc(score_pairs(pairs, tracks, eigen_describer()));
  eval::write_roc_csv(out_path(c, "roc_eigen.csv"), eigen);
  std::printf("correspondences,%zu\npairs,%zu\nauc_eigen,%.4f\n", corr.pairs.size(), pairs.size(), eigen.auc);
  if (!o.model_dir.empty()) {
    auto model = load_model(o.model_dir);
    const auto learned = eval::roc(score_pairs(pairs, tracks, model_describer(model)));
    eval::write_roc_csv(out_path(c, "roc.csv"), learned);
    std::printf("auc_%s,%.4f\n", descriptors::to_string(model.provider()).c_str(), learned.auc);
  }
}

void cmd_rank(const Common& c, const EvalOptions& o) {
  const auto cfg = resolve(c);
  const auto tracks = tracks_for(cfg, o.tracks_file);
  const auto corr = eval::generate_correspondences(tracks);
  std::optional<DescriptorModel> model;
  if (!o.model_dir.empty()) model.emplace(load_model(o.model_dir));
  const Describer describe = model ? model_describer(*model) : eigen_describer();

  std::map<segmentation::SegmentId, const SegmentTrack*> by_id;
  for (const auto& t : tracks) by_id[t.id] = &t;
  // The map holds the final observation of every track; queries are the growing
  // observations of each track's partner.
  std::vector<const segmentation::SegmentObservation*> finals;
  for (const auto& t : tracks) finals.push_back(&t.last());
  const auto final_values = describe(finals);
  std::vector<std::pair<segmentation::SegmentId, std::vector<double>>> map;
  for (std::size_t i = 0; i < tracks.size(); ++i)
    if (final_values[i]) map.emplace_back(tracks[i].id, *final_values[i]);

  std::vector<eval::RankQuery> queries;
  for (const auto& p : corr.pairs)
    for (auto [q, target] : {std::pair{p.a, p.b}, std::pair{p.b, p.a}}) {
      const SegmentTrack& t = *by_id.at(q);
      std::vector<const segmentation::SegmentObservation*> obs;
      for (const auto& ob : t.observations) obs.push_back(&ob);
      const auto values = describe(obs);
      const double full = static_cast<double>(t.last().points.size());
      for (std::size_t k = 0; k < obs.size(); ++k)
        if (values[k]) queries.push_back({*values[k], obs[k]->points.size() / full, target});
    }
  if (queries.empty()) throw DataError("no corresponding tracks to rank");
  const auto bins = eval::rank_vs_completeness(queries, map);
  eval::write_rank_csv(out_path(c, "rank.csv"), bins);
  for (const auto& b : bins) std::printf("%.1f,%.1f,%zu\n", b.lower, b.median_rank, b.count);
}

void cmd_recon(const Common& c, const EvalOptions& o) {
  const auto cfg = resolve(c);
  if (o.model_dir.empty()) throw ConfigError("evaluate recon needs --model");
  auto model = load_model(o.model_dir);
  const auto tracks = tracks_for(cfg, o.tracks_file);
  double sum = 0.0;
  std::size_t n = 0, empty = 0;
  for (const auto& t : tracks) {
    const auto v = prep::prepare(t.last());
    if (v.occupied() == 0) continue;
    const auto rec = model.reconstruct(model.describe(v));
    const auto original = prep::devoxelize(v, std::vector<double>(v.occupancy.begin(), v.occupancy.end()));
    const auto score = eval::reconstruction_ratio(original, rec.points, v.voxel_sides);
    empty += score.empty;
    sum += score.ratio;
    ++n;
  }
  if (n == 0) throw DataError("no segments to reconstruct");
  eval::write_recon_csv(out_path(c, "recon.csv"), {{model.descriptor_dim(), sum / n}});
  std::printf("segments,%zu\nempty_reconstructions,%zu\nratio,%.4f\n", n, empty, sum / n);
}

void cmd_compression(const Common& c, const EvalOptions& o) {
  resolve(c);
  eval::CompressionReport r;
  if (!o.map_file.empty()) {
    std::set<SemanticClass> exclude;
    for (const auto& e : o.exclude) {
      try {
        exclude.insert(descriptors::semantic_from_string(e));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
      }
    }
    const auto map = load_map(o.map_file);
    std::vector<eval::MapSegmentSummary> rows;
    for (const auto& [id, e] : map.entries()) rows.push_back({e.point_count, e.semantic});
    r = eval::compression_report(rows, map.dimension(), exclude);
  } else {
    if (!o.raw_bytes || !o.compressed_bytes || !o.segments)
      throw ConfigError("evaluate compression needs --map or --raw-bytes, --compressed-bytes and --segments");
    r = eval::compression_from_totals(*o.raw_bytes, *o.compressed_bytes, *o.segments, o.excluded.value_or(0));
  }
  eval::write_compression_csv(out_path(c, "compression.csv"), r);
  std::printf("raw_bytes,%.0f\ncompressed_bytes,%.0f\n", r.raw_bytes, r.compressed_bytes);
  if (r.ratio) std::printf("ratio,%.2f\n", *r.ratio);
  if (r.ratio_excl) std::printf("ratio_excl,%.2f\n", *r.ratio_excl);
}

// ---- localize

void cmd_localize(const Common& c, const std::string& map_file, const std::string& query_file) {
  const auto cfg = resolve(c);
  const auto map = load_map(map_file);
  const auto queries = read_descriptors_csv(query_file);
  std::vector<descriptors::Descriptor> latest;
  {
    std::map<segmentation::SegmentId, descriptors::Descriptor> by_id;
    for (const auto& d : queries) {
      auto it = by_id.find(d.segment_id);
      if (it == by_id.end() || it->second.observation_index <= d.observation_index) by_id[d.segment_id] = d;
    }
    for (auto& [id, d] : by_id) latest.push_back(std::move(d));
  }
  std::vector<localization::Candidate> candidates;
  try {
    candidates = localization::retrieve_candidates(map, latest, cfg.localization.neighbours, cfg.localization.exclude);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  localization::VerifyParams vp;
  vp.epsilon = cfg.localization.epsilon;
  vp.min_correspondences = cfg.localization.min_correspondences;
  vp.yaw_only = cfg.localization.yaw_only;
  const auto result = localization::geometric_verify(candidates, vp);

  nlohmann::json j;
  j["queries"] = latest.size();
  j["candidates"] = candidates.size();
  j["localized"] = result.has_value();
  if (result) {
    const auto& t = result->transform;
    std::vector<double> m;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) m.push_back(t.rotation()(r, k));
      m.push_back(t.translation()(r));
    }
    j["transform"] = m;
    j["consistency_size"] = result->consistency_size;
    j["exact"] = result->exact;
    j["pairs"] = result->pairs;
  }
  std::ofstream(out_path(c, "localization.json")) << j.dump(2) << '\n';
  std::printf("queries,%zu\ncandidates,%zu\nlocalized,%d\n", latest.size(), candidates.size(), result ? 1 : 0);
  if (result) std::printf("consistency_size,%zu\n", result->consistency_size);
}

// ---- simulate

void cmd_simulate(const Common& c) {
  const auto cfg = resolve(c);
  const auto world = generate_world(cfg.seed, cfg.world);
  std::optional<DescriptorModel> model;
  if (cfg.descriptor.provider != descriptors::Provider::eigen) model.emplace(load_model(cfg.descriptor.model_dir));
  const auto result = run_multi_robot(cfg, world, model ? &*model : nullptr);
  write_artifacts(result, cfg, c.out_dir, model ? &*model : nullptr);
  print_rows(stats_rows(result));
  std::printf("map_checksum,%016llx\n",
              static_cast<unsigned long long>(file_checksum(out_path(c, "map.smap"))));
  if (result.error) throw std::runtime_error("simulation stopped early: " + *result.error);
}

// ---- reconstruct-map

void cmd_reconstruct_map(const Common& c, const std::string& map_file, const std::string& model_dir) {
  resolve(c);
  const auto map = load_map(map_file);
  auto model = load_model(model_dir);
  geom::PointCloud cloud;
  std::size_t segments = 0;
  for (const auto& [id, e] : map.entries()) {
    descriptors::Descriptor d = e.descriptor;
    d.centroid = e.centroid;
    try {
      const auto rec = model.reconstruct(d);
      cloud.insert(cloud.end(), rec.points.begin(), rec.points.end());
      ++segments;
    } catch (const std::invalid_argument& err) {
      throw DataError(std::string("map does not fit the model: ") + err.what());
    }
  }
  write_cloud_ply(out_path(c, "reconstruction.ply"), cloud);
  std::printf("segments,%zu\npoints,%zu\n", segments, cloud.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segment-based LiDAR localization and map compression"};
  app.require_subcommand(1);

  Common gw_c, seg_c, tr_c, ae_c, sem_c, desc_c, roc_c, rank_c, recon_c, comp_c, loc_c, sim_c, rec_c;
  std::size_t scans = 0;
  std::string world_file, model_dir, tracks_file, map_file, query_file;
  std::vector<std::string> clouds;
  EvalOptions eo;

  auto* gw = app.add_subcommand("generate-world", "Write a synthetic world (and optionally scans)");
  add_common(gw, gw_c);
  gw->add_option("--scans", scans, "Render this many scans along the first robot's path");

  auto* seg = app.add_subcommand("segment", "Segment a scenario or a list of world-frame clouds");
  add_common(seg, seg_c);
  seg->add_option("--world", world_file, "World file from generate-world");
  seg->add_option("--cloud", clouds, "World-frame CSV or PLY clouds, processed in order around their centroids");

  auto* tr = app.add_subcommand("train", "Train the descriptor (classification + reconstruction)");
  add_common(tr, tr_c);
  auto* ae = app.add_subcommand("train-ae", "Train the autoencoder descriptor");
  add_common(ae, ae_c);

  auto* sem = app.add_subcommand("train-semantic", "Train the semantic head of a model");
  add_common(sem, sem_c);
  sem->add_option("--model", model_dir, "Model directory")->required();

  auto* desc = app.add_subcommand("describe", "Describe every observation of a track file");
  add_common(desc, desc_c);
  desc->add_option("--model", model_dir, "Model directory (eigen features when omitted)");
  desc->add_option("--tracks", tracks_file, "tracks.csv (the scenario is played when omitted)");

  auto* ev = app.add_subcommand("evaluate", "Evaluation reports");
  ev->require_subcommand(1);
  auto* roc = ev->add_subcommand("roc", "Retrieval ROC over correspondence pairs");
  auto* rank = ev->add_subcommand("rank", "Retrieval rank against completeness");
  auto* recon = ev->add_subcommand("recon", "Reconstruction ratio of final observations");
  auto* comp = ev->add_subcommand("compression", "Map compression ratios");
  for (auto [sub, cc] : {std::pair{roc, &roc_c}, {rank, &rank_c}, {recon, &recon_c}}) {
    add_common(sub, *cc);
    sub->add_option("--model", eo.model_dir, "Model directory");
    sub->add_option("--tracks", eo.tracks_file, "tracks.csv (the scenario is played when omitted)");
  }
  roc->add_option("--negatives", eo.negatives, "Negative pairs per positive")->capture_default_str();
  add_common(comp, comp_c);
  comp->add_option("--map", eo.map_file, "Map file");
  comp->add_option("--exclude", eo.exclude, "Semantic classes left out of the second ratio");
  comp->add_option("--raw-bytes", eo.raw_bytes, "Raw map size");
  comp->add_option("--compressed-bytes", eo.compressed_bytes, "Compressed map size");
  comp->add_option("--segments", eo.segments, "Segment count");
  comp->add_option("--excluded", eo.excluded, "Excluded segment count");

  auto* loc = app.add_subcommand("localize", "Localize query descriptors against a map");
  add_common(loc, loc_c);
  loc->add_option("--map", map_file, "Map file")->required();
  loc->add_option("--query", query_file, "descriptors.csv of the local segments")->required();

  auto* sim = app.add_subcommand("simulate", "Run the multi-robot scenario");
  add_common(sim, sim_c);

  auto* rec = app.add_subcommand("reconstruct-map", "Decode a map into a point cloud");
  add_common(rec, rec_c);
  rec->add_option("--map", map_file, "Map file")->required();
  rec->add_option("--model", model_dir, "Model directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gw->parsed()) cmd_generate_world(gw_c, scans);
    if (seg->parsed()) cmd_segment(seg_c, world_file, clouds);
    if (tr->parsed()) cmd_train(tr_c, descriptors::TrainMode::joint);
    if (ae->parsed()) cmd_train(ae_c, descriptors::TrainMode::autoencoder);
    if (sem->parsed()) cmd_train_semantic(sem_c, model_dir);
    if (desc->parsed()) cmd_describe(desc_c, model_dir, tracks_file);
    if (roc->parsed()) cmd_roc(roc_c, eo);
    if (rank->parsed()) cmd_rank(rank_c, eo);
    if (recon->parsed()) cmd_recon(recon_c, eo);
    if (comp->parsed()) cmd_compression(comp_c, eo);
    if (loc->parsed()) cmd_localize(loc_c, map_file, query_file);
    if (sim->parsed()) cmd_simulate(sim_c);
    if (rec->parsed()) cmd_reconstruct_map(rec_c, map_file, model_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
