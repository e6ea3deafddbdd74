#include "segloc/pipeline/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "segloc/descriptors/eigen_features.hpp"
#include "segloc/geom/voxel_grid.hpp"
#include "segloc/prep/voxelize.hpp"

namespace segloc::pipeline {

using descriptors::Descriptor;
using descriptors::DescriptorModel;
using localization::GlobalSegmentMap;
using localization::MapEntry;

SegmentId global_segment_id(RobotId robot, SegmentId local) { return (static_cast<SegmentId>(robot) << 48) | local; }
RobotId robot_of(SegmentId global) { return static_cast<RobotId>(global >> 48); }

BandwidthStats& BandwidthStats::operator+=(const BandwidthStats& o) {
  cloud_bytes += o.cloud_bytes;
  segment_bytes += o.segment_bytes;
  descriptor_bytes += o.descriptor_bytes;
  scans += o.scans;
  observations += o.observations;
  descriptors += o.descriptors;
  return *this;
}

std::vector<std::vector<TimedPose>> scenario_trajectories(const ScenarioConfig& config) {
  std::vector<std::vector<TimedPose>> out;
  for (const auto& r : config.robots)
    out.push_back(ring_trajectory(config.world.road_radius, r.start_angle, r.arc, config.step_length, config.dt,
                                  config.sensor_height, r.clockwise));
  return out;
}

namespace {

constexpr std::uint64_t kScanStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kOdometryStream = 0xc2b2ae3d27d4eb4fULL;
constexpr std::size_t kBytesPerPoint = 12;

class RobotWorker {
 public:
  RobotWorker(RobotId id, const ScenarioConfig& cfg, const SyntheticWorld& world, std::vector<TimedPose> trajectory,
              std::optional<DescriptorModel> model)
      : id_(id),
        cfg_(cfg),
        world_(world),
        trajectory_(std::move(trajectory)),
        model_(std::move(model)),
        grid_(cfg.segmentation.voxel_side, cfg.segmentation.activation_threshold),
        segmenter_(cfg.segmentation.segmenter),
        scan_rng_(cfg.seed ^ (kScanStream * (id + 1))),
        odometry_rng_(cfg.seed ^ (kOdometryStream * (id + 1))) {}

  bool done() const { return step_ >= trajectory_.size(); }
  std::size_t steps() const { return trajectory_.size(); }

  RobotMessage step() {
    const TimedPose& tp = trajectory_[step_];
    RobotMessage m;
    m.robot = id_;
    m.step = step_;
    m.time = tp.time;
    if (step_ > 0) {
      const RigidTransform delta = trajectory_[step_ - 1].pose.inverse() * tp.pose;
      std::normal_distribution<double> n(0.0, 1.0);
      geom::Vector6d xi;
      const double st = cfg_.odometry.translation, sr = cfg_.odometry.rotation;
      xi << st * n(odometry_rng_), st * n(odometry_rng_), 0.1 * st * n(odometry_rng_), 0.1 * sr * n(odometry_rng_),
          0.1 * sr * n(odometry_rng_), sr * n(odometry_rng_);
      odometry_ = odometry_ * delta * geom::se3_exp(xi);
    }
    m.odometry = odometry_;

    const LabeledScan scan = render_scan(world_, tp.pose, cfg_.sensor, scan_rng_);
    m.cloud_points = scan.points.size();
    const auto objects = segmentation::remove_ground(scan.points, odometry_, cfg_.segmentation.ground_threshold);
    const auto inserted = grid_.insert_cloud(objects, odometry_);
    auto observations = segmenter_.grow(grid_, inserted.updated_active, odometry_.translation(), tp.time);
    for (const auto& [absorbed, survivor] : segmenter_.take_merges())
      m.merges.emplace_back(global_segment_id(id_, absorbed), global_segment_id(id_, survivor));

    for (auto& obs : observations) {
      const SegmentId local = obs.segment_id;
      obs.segment_id = global_segment_id(id_, local);
      m.segment_points += obs.points.size();
      std::optional<Descriptor> d;
      if (cfg_.descriptor.provider == descriptors::Provider::eigen) {
        d = descriptors::describe_eigen(obs);
      } else {
        d = model_->describe(prep::prepare(obs));
        if (model_->has_semantic_head()) d->semantic = model_->classify_semantic(*d);
      }
      if (!d) continue;
      d->segment_id = obs.segment_id;
      d->observation_index = obs.index;
      d->centroid = obs.centroid;
      m.descriptors.push_back(std::move(*d));
      m.descriptor_points.push_back(obs.points.size());
    }
    if (cfg_.keep_tracks) m.observations = std::move(observations);
    segmenter_.retire_complete(odometry_.translation(), grid_);
    ++step_;
    return m;
  }

 private:
  RobotId id_;
  const ScenarioConfig& cfg_;
  const SyntheticWorld& world_;
  std::vector<TimedPose> trajectory_;
  std::optional<DescriptorModel> model_;
  geom::DynamicVoxelGrid grid_;
  segmentation::IncrementalSegmenter segmenter_;
  std::mt19937_64 scan_rng_, odometry_rng_;
  RigidTransform odometry_;
  std::size_t step_ = 0;
};

class CentralWorker {
 public:
  CentralWorker(const ScenarioConfig& cfg, SimulationResult& out) : cfg_(cfg), out_(out) {
    const std::size_t n = cfg.robots.size();
    out_.bandwidth.assign(n, {});
    out_.odometry.assign(n, {});
    out_.nodes.assign(n, {});
    out_.tracks.assign(n, {});
    track_index_.assign(n, {});
    component_.resize(n);
    std::iota(component_.begin(), component_.end(), 0);
    const double st = std::max(cfg.odometry.translation, 1e-3), sr = std::max(cfg.odometry.rotation, 1e-4);
    odometry_info_ = localization::isotropic_information(st, sr);
  }

  void consume(RobotMessage&& m) {
    const RobotId r = m.robot;
    const bool transmit = cfg_.robots[r].transmit;
    auto& bw = out_.bandwidth[r];
    ++bw.scans;
    bw.cloud_bytes += m.cloud_points * kBytesPerPoint;
    if (transmit) {
      bw.segment_bytes += m.segment_points * kBytesPerPoint;
      bw.observations += m.descriptor_points.size();
      for (const auto& [absorbed, survivor] : m.merges) out_.map.erase(absorbed);
      for (std::size_t i = 0; i < m.descriptors.size(); ++i) {
        const auto& d = m.descriptors[i];
        MapEntry e;
        e.id = d.segment_id;
        e.centroid = d.centroid;
        e.descriptor = d;
        e.semantic = d.semantic;
        e.robot = r;
        e.observation_index = d.observation_index;
        e.timestamp = m.time;
        e.point_count = m.descriptor_points[i];
        out_.map.update(e);
        bw.descriptor_bytes += localization::map_record_bytes(d.values.size());
        ++bw.descriptors;
      }
    }
    if (cfg_.keep_tracks) record_tracks(r, m);

    auto& odo = out_.odometry[r];
    const std::size_t node = out_.graph.add_node(
        r, odo.empty() ? m.odometry : out_.graph.nodes()[out_.nodes[r].back()].pose * (odo.back().inverse() * m.odometry));
    if (!odo.empty())
      out_.graph.add_odometry(out_.nodes[r].back(), node, odo.back().inverse() * m.odometry, odometry_info_);
    odo.push_back(m.odometry);
    out_.nodes[r].push_back(node);

    if (transmit && cfg_.localization.every > 0 && m.step % cfg_.localization.every == 0) localize(r, m.step, m.time);
  }

 private:
  RobotId find(RobotId r) {
    while (component_[r] != r) r = component_[r] = component_[component_[r]];
    return r;
  }

  void record_tracks(RobotId r, const RobotMessage& m) {
    auto& tracks = out_.tracks[r];
    auto& index = track_index_[r];
    for (const auto& [absorbed, survivor] : m.merges) {
      auto it = index.find(absorbed);
      if (it != index.end()) tracks[it->second].merged_into = survivor;
    }
    for (const auto& obs : m.observations) {
      auto it = index.find(obs.segment_id);
      if (it == index.end()) {
        it = index.emplace(obs.segment_id, tracks.size()).first;
        segmentation::SegmentTrack t;
        t.id = obs.segment_id;
        tracks.push_back(std::move(t));
      }
      tracks[it->second].observations.push_back(obs);
    }
  }

  std::size_t node_at(RobotId r, double time) const {
    const auto& nodes = out_.nodes[r];
    const auto step = static_cast<std::size_t>(std::max(0.0, std::round(time / cfg_.dt)));
    return nodes[std::min(step, nodes.size() - 1)];
  }

  std::size_t step_of(std::size_t node) const {
    const auto& n = out_.graph.nodes()[node];
    return n.index;
  }

  void localize(RobotId q, std::size_t step, double time) {
    const auto& lc = cfg_.localization;
    const Point3 here = out_.odometry[q][step].translation();
    std::vector<Descriptor> queries;
    for (const auto& [id, e] : out_.map.entries()) {
      if (e.robot != q || (e.centroid - here).norm() > lc.local_radius) continue;
      if (e.semantic && lc.exclude.count(*e.semantic)) continue;
      Descriptor d = e.descriptor;
      d.centroid = e.centroid;
      d.segment_id = id;
      queries.push_back(std::move(d));
    }
    if (queries.size() < lc.min_correspondences) return;
    for (RobotId mr = 0; mr < cfg_.robots.size(); ++mr) {
      if (out_.nodes[mr].empty()) continue;
      GlobalSegmentMap pool;
      for (const auto& [id, e] : out_.map.entries()) {
        if (e.robot != mr) continue;
        if (mr == q && e.timestamp > time - lc.self_exclusion) continue;
        pool.update(e);
      }
      if (pool.size() < lc.min_correspondences) continue;
      const auto candidates = localization::retrieve_candidates(pool, queries, lc.neighbours, lc.exclude);
      ++out_.verification_attempts;
      localization::VerifyParams vp;
      vp.epsilon = lc.epsilon;
      vp.min_correspondences = lc.min_correspondences;
      vp.yaw_only = lc.yaw_only;
      auto result = localization::geometric_verify(candidates, vp);
      if (!result) continue;
      result->timestamp = time;
      double newest = 0.0;
      for (const auto& [l, g] : result->pairs) newest = std::max(newest, pool.find(g)->timestamp);
      accept(q, mr, step, node_at(mr, newest), std::move(*result));
    }
  }

  void accept(RobotId q, RobotId mr, std::size_t step, std::size_t map_node, localization::LocalizationResult result) {
    const std::size_t query_node = out_.nodes[q][step];
    const RigidTransform& pq = out_.odometry[q][step];
    const RigidTransform& pm = out_.odometry[mr][step_of(map_node)];
    const RigidTransform z = pm.inverse() * result.transform * pq;

    LocalizationEvent ev;
    ev.time = result.timestamp;
    ev.query_robot = q;
    ev.map_robot = mr;
    ev.query_node = query_node;
    ev.map_node = map_node;
    const RigidTransform& xm_true = out_.truth[mr][step_of(map_node)].pose;
    const RigidTransform& xq_true = out_.truth[q][step].pose;
    const RigidTransform truth_in_m = pm * xm_true.inverse() * xq_true;
    ev.translation_error = ((result.transform * pq).translation() - truth_in_m.translation()).norm();
    ev.result = std::move(result);
    out_.localizations.push_back(std::move(ev));

    auto& nodes = out_.graph.nodes();
    const RobotId cq = find(q), cm = find(mr);
    if (cq != cm) {
      // Bring the query robot's component into the map robot's frame before linking.
      const RigidTransform c = nodes[map_node].pose * z * nodes[query_node].pose.inverse();
      for (auto& n : nodes)
        if (find(n.robot) == cq) n.pose = c * n.pose;
      component_[std::max(cq, cm)] = std::min(cq, cm);
    }
    out_.graph.add_loop(map_node, query_node, z);
    localization::optimize_pose_graph(out_.graph);
  }

  const ScenarioConfig& cfg_;
  SimulationResult& out_;
  std::vector<std::map<SegmentId, std::size_t>> track_index_;
  std::vector<RobotId> component_;
  localization::Information odometry_info_;
};

template <typename T>
class MessageQueue {
 public:
  void push(T v) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  T pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !q_.empty(); });
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
};

struct Envelope {
  std::optional<RobotMessage> message;
  std::string error;
};

}  // namespace

SimulationResult run_multi_robot(const ScenarioConfig& config, const SyntheticWorld& world, DescriptorModel* model) {
  validate(config);
  if (config.descriptor.provider != descriptors::Provider::eigen) {
    if (!model) throw ConfigError("a learned descriptor provider needs a model");
    if (model->provider() != config.descriptor.provider)
      throw ConfigError("model provider " + descriptors::to_string(model->provider()) + " does not match config " +
                        descriptors::to_string(config.descriptor.provider));
  }
  SimulationResult out;
  out.truth = scenario_trajectories(config);
  std::vector<std::unique_ptr<RobotWorker>> workers;
  std::size_t max_steps = 0;
  for (RobotId r = 0; r < config.robots.size(); ++r) {
    std::optional<DescriptorModel> m;
    if (model) m.emplace(model->clone());
    workers.push_back(std::make_unique<RobotWorker>(r, config, world, out.truth[r], std::move(m)));
    max_steps = std::max(max_steps, workers.back()->steps());
    if (!out.truth[r].empty()) out.duration = std::max(out.duration, out.truth[r].back().time);
  }
  CentralWorker central(config, out);

  if (!config.threaded) {
    try {
      for (std::size_t s = 0; s < max_steps; ++s)
        for (auto& w : workers)
          if (!w->done()) central.consume(w->step());
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  } else {
    std::vector<MessageQueue<Envelope>> queues(workers.size());
    std::atomic<bool> stop{false};
    std::vector<std::thread> threads;
    for (std::size_t r = 0; r < workers.size(); ++r)
      threads.emplace_back([&, r] {
        try {
          while (!workers[r]->done() && !stop) queues[r].push({workers[r]->step(), {}});
        } catch (const std::exception& e) {
          queues[r].push({std::nullopt, e.what()});
        }
      });
    try {
      for (std::size_t s = 0; s < max_steps && !out.error; ++s)
        for (std::size_t r = 0; r < workers.size() && !out.error; ++r) {
          if (s >= workers[r]->steps()) continue;
          Envelope env = queues[r].pop();
          if (!env.message) {
            out.error = "robot " + std::to_string(r) + ": " + env.error;
            break;
          }
          central.consume(std::move(*env.message));
        }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    stop = true;
    for (auto& t : threads) t.join();
  }
  for (const auto& b : out.bandwidth) out.total += b;
  return out;
}

std::vector<std::pair<std::string, double>> stats_rows(const SimulationResult& r) {
  const double seconds = std::max(r.duration, 1e-9);
  std::vector<std::pair<std::string, double>> rows{
      {"local_clouds_bytes", static_cast<double>(r.total.cloud_bytes)},
      {"segments_bytes", static_cast<double>(r.total.segment_bytes)},
      {"descriptors_bytes", static_cast<double>(r.total.descriptor_bytes)},
      {"local_clouds_kB_per_s", r.total.cloud_bytes / 1000.0 / seconds},
      {"segments_kB_per_s", r.total.segment_bytes / 1000.0 / seconds},
      {"descriptors_kB_per_s", r.total.descriptor_bytes / 1000.0 / seconds},
      {"scans", static_cast<double>(r.total.scans)},
      {"segment_observations", static_cast<double>(r.total.observations)},
      {"descriptors", static_cast<double>(r.total.descriptors)},
      {"map_segments", static_cast<double>(r.map.size())},
      {"verification_attempts", static_cast<double>(r.verification_attempts)},
      {"localizations", static_cast<double>(r.localizations.size())},
      {"duration_s", r.duration},
  };
  return rows;
}

void write_artifacts(const SimulationResult& result, const ScenarioConfig& config, const std::string& out_dir,
                     DescriptorModel* model) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  localization::write_map_file((dir / "map.smap").string(), result.map);

  std::ofstream traj(dir / "trajectories.csv");
  traj << "robot,step,time,true_x,true_y,true_z,true_yaw,odom_x,odom_y,odom_z,odom_yaw,est_x,est_y,est_z,est_yaw\n";
  traj.precision(10);
  for (std::size_t r = 0; r < result.odometry.size(); ++r)
    for (std::size_t s = 0; s < result.odometry[r].size(); ++s) {
      const auto& t = result.truth[r][s];
      const auto& o = result.odometry[r][s];
      const auto& e = result.graph.nodes()[result.nodes[r][s]].pose;
      traj << r << ',' << s << ',' << t.time;
      for (const auto* p : {&t.pose, &o, &e})
        traj << ',' << p->translation().x() << ',' << p->translation().y() << ',' << p->translation().z() << ','
             << p->yaw();
      traj << '\n';
    }

  std::ofstream loc(dir / "localizations.csv");
  loc << "time,query_robot,map_robot,query_node,map_node,correspondences,tx,ty,tz,yaw,translation_error\n";
  loc.precision(10);
  for (const auto& e : result.localizations) {
    const auto& t = e.result.transform;
    loc << e.time << ',' << e.query_robot << ',' << e.map_robot << ',' << e.query_node << ',' << e.map_node << ','
        << e.result.consistency_size << ',' << t.translation().x() << ',' << t.translation().y() << ','
        << t.translation().z() << ',' << t.yaw() << ',' << e.translation_error << '\n';
  }

  std::ofstream stats(dir / "stats.csv");
  stats << "quantity,value\n";
  stats.precision(12);
  for (const auto& [k, v] : stats_rows(result)) stats << k << ',' << v << '\n';
  stats << "map_file_bytes," << fs::file_size(dir / "map.smap") << '\n';
  if (result.error) stats << "error,\"" << *result.error << "\"\n";

  if (model && config.descriptor.provider != descriptors::Provider::eigen) {
    geom::PointCloud cloud;
    for (const auto& [id, e] : result.map.entries()) {
      const RobotId r = e.robot;
      if (result.nodes[r].empty()) continue;
      const auto step = std::min(static_cast<std::size_t>(std::max(0.0, std::round(e.timestamp / config.dt))),
                                 result.nodes[r].size() - 1);
      const RigidTransform to_common =
          result.graph.nodes()[result.nodes[r][step]].pose * result.odometry[r][step].inverse();
      Descriptor d = e.descriptor;
      d.centroid = e.centroid;
      for (const auto& p : model->reconstruct(d).points) cloud.push_back(to_common.apply(p));
    }
    write_cloud_ply((dir / "reconstruction.ply").string(), cloud);
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

std::map<SegmentId, SegmentLabel> label_tracks(const std::vector<segmentation::SegmentTrack>& tracks,
                                               const SyntheticWorld& world, const RigidTransform& to_world,
                                               double tolerance) {
  std::map<SegmentId, SegmentLabel> out;
  for (const auto& t : tracks) {
    if (t.observations.empty()) continue;
    const std::uint32_t id = object_near(world, to_world.apply(t.last().centroid), tolerance);
    if (id == 0) continue;
    out[t.id] = {world.find(id)->label, id};
  }
  return out;
}

}  // namespace segloc::pipeline
