#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <random>

#include "doctest.h"
#include "segloc/segmentation/segmenter.hpp"
#include "support/oracles.hpp"

using namespace segloc;
using namespace segloc::segmentation;
using geom::DynamicVoxelGrid;
using geom::RigidTransform;

namespace {

PointCloud lattice_block(const Point3& origin, int nx, int ny, int nz, double step) {
  PointCloud pts;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) pts.push_back(origin + Point3(i, j, k) * step);
  return pts;
}

struct Harness {
  DynamicVoxelGrid grid{0.1, 1};
  IncrementalSegmenter seg;
  explicit Harness(double growing_radius, std::size_t min_points = 1)
      : seg(SegmenterParams{1e9, growing_radius, min_points, 1.0}) {}

  std::vector<SegmentObservation> feed(const PointCloud& pts, double t = 0.0) {
    const auto r = grid.insert_cloud(pts, RigidTransform::identity());
    return seg.grow(grid, r.updated_active, Point3::Zero(), t);
  }
  std::vector<SegmentId> labels(const PointCloud& pts) const {
    std::vector<SegmentId> out;
    for (const auto& p : pts) out.push_back(*seg.label_of(grid.index_of(p)));
    return out;
  }
};

}  // namespace

TEST_CASE("disconnected clusters form separate segments") {
  Harness h(0.2);
  const PointCloud a = lattice_block(Point3(0, 0, 0), 5, 5, 5, 0.1);
  const PointCloud b = lattice_block(Point3(10, 0, 0), 5, 5, 5, 0.1);
  PointCloud all = a;
  all.insert(all.end(), b.begin(), b.end());
  const auto obs = h.feed(all);
  CHECK(obs.size() == 2);
  CHECK(h.seg.live_segments().size() == 2);
}

TEST_CASE("a point bridge joins two clusters into one segment") {
  Harness h(0.2);
  PointCloud all = lattice_block(Point3(0, 0, 0), 5, 5, 5, 0.1);
  const PointCloud b = lattice_block(Point3(10, 0, 0), 5, 5, 5, 0.1);
  all.insert(all.end(), b.begin(), b.end());
  for (double x = 0.4; x < 10.0; x += 0.1) all.emplace_back(x, 0.0, 0.0);
  h.feed(all);
  CHECK(h.seg.live_segments().size() == 1);
}

TEST_CASE("merging keeps the numerically smallest id") {
  Harness h(0.2);
  h.feed(lattice_block(Point3(0, 0, 0), 3, 3, 3, 0.1));
  h.feed(lattice_block(Point3(2, 0, 0), 3, 3, 3, 0.1));
  REQUIRE(h.seg.live_segments() == std::vector<SegmentId>{0, 1});
  PointCloud bridge;
  for (double x = 0.3; x < 2.0; x += 0.1) bridge.emplace_back(x, 0.0, 0.0);
  const auto obs = h.feed(bridge);
  CHECK(h.seg.live_segments() == std::vector<SegmentId>{0});
  const auto merges = h.seg.take_merges();
  REQUIRE(merges.size() == 1);
  CHECK(merges[0] == std::pair<SegmentId, SegmentId>{1, 0});
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].segment_id == 0);
}

TEST_CASE("incremental growth equals batch connected components over random instances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK_MESSAGE(testing::segmentation_matches_oracle(seed), "seed " << seed);
}

TEST_CASE("observations grow monotonically and carry exact centroids") {
  Harness h(0.2, 10);
  std::map<SegmentId, std::size_t> last;
  for (int step = 0; step < 6; ++step) {
    const auto obs = h.feed(lattice_block(Point3(0.1 * step * 3, 0, 0), 3, 4, 4, 0.1), step);
    for (const auto& o : obs) {
      CHECK(o.points.size() >= last[o.segment_id]);
      last[o.segment_id] = o.points.size();
      const Point3 c = geom::centroid(o.points);
      CHECK((c - o.centroid).norm() < 1e-12);
    }
  }
  REQUIRE(last.size() == 1);
}

TEST_CASE("segments below min_points are not emitted and growth gating limits snapshots") {
  Harness small(0.2, 1000);
  CHECK(small.feed(lattice_block(Point3(0, 0, 0), 5, 5, 5, 0.1)).empty());

  DynamicVoxelGrid grid(0.1, 1);
  IncrementalSegmenter gated(SegmenterParams{1e9, 0.2, 1, 2.0});
  int emitted = 0;
  for (int step = 0; step < 8; ++step) {
    const auto r = grid.insert_cloud(lattice_block(Point3(0.1 * step, 0, 0), 1, 5, 5, 0.1), RigidTransform::identity());
    emitted += static_cast<int>(gated.grow(grid, r.updated_active, Point3::Zero(), step).size());
  }
  // 25, 50, 100, 200 points pass the doubling gate.
  CHECK(emitted == 4);
}

TEST_CASE("path connectivity bound holds for every segment") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    PointCloud pts;
    for (int i = 0; i < 400; ++i) pts.emplace_back(u(rng), u(rng), 0.3 * u(rng));
    Harness h(0.2, 1);
    const auto obs = h.feed(pts);
    for (const auto& o : obs) {
      double diameter = 0.0;
      for (const auto& a : o.points)
        for (const auto& b : o.points) diameter = std::max(diameter, (a - b).norm());
      CHECK(diameter <= static_cast<double>(o.points.size()) * 0.2 + 1e-12);
    }
  }
}

TEST_CASE("seeds outside R stay pending until the robot approaches") {
  DynamicVoxelGrid grid(0.1, 1);
  IncrementalSegmenter seg(SegmenterParams{5.0, 0.2, 1, 1.0});
  const auto r = grid.insert_cloud(lattice_block(Point3(20, 0, 0), 3, 3, 3, 0.1), RigidTransform::identity());
  CHECK(seg.grow(grid, r.updated_active, Point3::Zero(), 0.0).empty());
  CHECK(seg.pending_seed_count() == grid.voxel_count());
  CHECK(seg.grow(grid, {}, Point3(18, 0, 0), 1.0).size() == 1);
  CHECK(seg.pending_seed_count() == 0);
}

TEST_CASE("mark_complete follows the distance definition") {
  SegmentTrack track;
  SegmentObservation o;
  o.points = lattice_block(Point3(0, 0, 0), 4, 4, 4, 0.5);
  o.centroid = geom::centroid(o.points);
  track.observations.push_back(o);
  const double R = 10.0;
  CHECK(mark_complete(track, Point3(2 * R + 2, 0, 0), R).complete);
  CHECK_FALSE(mark_complete(track, Point3(1, 1, 1), R).complete);
  auto done = mark_complete(track, Point3(100, 0, 0), R);
  CHECK(mark_complete(done, Point3(0, 0, 0), R).complete);

  // Drive past along y = 3: completion flips exactly on the first pose whose
  // minimum point distance exceeds R (brute-force distance scan).
  std::optional<int> first_complete, first_far;
  for (int step = 0; step < 400; ++step) {
    const Point3 robot(-20.0 + 0.25 * step, 3.0, 0.0);
    if (step > 80 && !first_complete && mark_complete(track, robot, R).complete) first_complete = step;
    double min_d = 1e18;
    for (const auto& p : o.points) min_d = std::min(min_d, (p - robot).norm());
    if (step > 80 && !first_far && min_d > R) first_far = step;
  }
  REQUIRE(first_far);
  CHECK(first_complete == first_far);
}

TEST_CASE("retire_complete erases finished segments from the grid") {
  DynamicVoxelGrid grid(0.1, 1);
  IncrementalSegmenter seg(SegmenterParams{5.0, 0.2, 1, 1.0});
  const auto r = grid.insert_cloud(lattice_block(Point3(1, 0, 0), 3, 3, 3, 0.1), RigidTransform::identity());
  seg.grow(grid, r.updated_active, Point3::Zero(), 0.0);
  CHECK(seg.retire_complete(Point3(2, 0, 0), grid).empty());
  const auto retired = seg.retire_complete(Point3(20, 0, 0), grid);
  CHECK(retired == std::vector<SegmentId>{0});
  CHECK(grid.point_count() == 0);
  CHECK(seg.live_segments().empty());
}

TEST_CASE("remove_ground on flat ground keeps only raised points") {
  PointCloud cloud = lattice_block(Point3(-5, -5, 0), 101, 101, 1, 0.1);
  const std::size_t ground = cloud.size();
  // Box resting on the ground.
  for (const auto& p : lattice_block(Point3(1, 1, 0.1), 11, 11, 15, 0.1)) cloud.push_back(p);
  const auto kept = remove_ground(cloud, RigidTransform::identity(), 0.2);
  CHECK_FALSE(kept.empty());
  for (const auto& p : kept) {
    CHECK(p.z() > 0.2);
    CHECK(p.x() >= 1.0 - 1e-9);
  }
  CHECK(kept.size() < cloud.size() - ground);
  CHECK(remove_ground({}, RigidTransform::identity(), 0.2).empty());
}

TEST_CASE("remove_ground on a 5 degree slope keeps boxes and drops the plane") {
  const double slope = std::tan(5.0 * M_PI / 180.0);
  const double threshold = 0.2;
  auto ground_z = [&](double x) { return slope * x; };
  PointCloud cloud;
  std::vector<int> is_box;
  std::vector<bool> labelled_object;
  for (double x = -10; x <= 10; x += 0.1)
    for (double y = -10; y <= 10; y += 0.1) {
      cloud.emplace_back(x, y, ground_z(x));
      is_box.push_back(0);
      labelled_object.push_back(false);
    }
  for (const Point3& base : {Point3(-4, 2, 0), Point3(5, -3, 0)}) {
    for (double x = 0; x <= 1.5; x += 0.1)
      for (double y = 0; y <= 1.5; y += 0.1)
        for (double z = 0; z <= 2.0; z += 0.1) {
          const bool surface = x < 0.05 || x > 1.45 || y < 0.05 || y > 1.45 || z > 1.95;
          if (!surface) continue;
          const double gx = base.x() + x;
          const Point3 p(gx, base.y() + y, ground_z(base.x()) + z);
          cloud.push_back(p);
          is_box.push_back(1);
          // Generator label: object points rise above the true surface by more than the band.
          labelled_object.push_back(p.z() - ground_z(gx) > threshold);
        }
  }
  const auto pose = RigidTransform::identity();
  const auto kept = remove_ground(cloud, pose, threshold);
  std::set<std::tuple<double, double, double>> kept_set;
  for (const auto& p : kept) kept_set.insert({p.x(), p.y(), p.z()});
  std::size_t objects = 0, recalled = 0, plane = 0, leaked = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool survived = kept_set.contains({cloud[i].x(), cloud[i].y(), cloud[i].z()});
    if (labelled_object[i]) ++objects, recalled += survived;
    if (!is_box[i]) ++plane, leaked += survived;
  }
  CHECK(static_cast<double>(recalled) / objects >= 0.95);
  CHECK(static_cast<double>(leaked) / plane <= 0.05);
}
