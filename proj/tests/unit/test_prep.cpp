#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "doctest.h"
#include "segloc/geom/transform.hpp"
#include "segloc/prep/voxelize.hpp"

using namespace segloc;
using namespace segloc::prep;

namespace {

PointCloud random_box(std::mt19937_64& rng, const Point3& dims, int n) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  PointCloud pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng) * dims.x(), u(rng) * dims.y(), u(rng) * dims.z());
  return pts;
}

// Two parallel strips along x; the dense one sits at +y.
PointCloud heavy_strip(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud pts;
  for (int i = 0; i < n; ++i) {
    const double y = i % 10 < 7 ? 0.2 * u(rng) : -1.5 + 0.2 * u(rng);
    pts.emplace_back(6.0 * u(rng), y, u(rng));
  }
  return pts;
}

// Surface samples of a box, as a range sensor would see them.
PointCloud box_surface(std::mt19937_64& rng, const Point3& dims, int n) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_int_distribution<int> face(0, 5);
  PointCloud pts;
  for (int i = 0; i < n; ++i) {
    Point3 p(u(rng), u(rng), u(rng));
    const int f = face(rng);
    p[f / 2] = f % 2 ? 0.5 : -0.5;
    pts.push_back(p.cwiseProduct(dims));
  }
  return pts;
}

double iou(const VoxelizedSegment& a, const VoxelizedSegment& b) {
  std::size_t inter = 0, uni = 0;
  for (int i = 0; i < kGridVolume; ++i) {
    inter += a.occupancy[i] && b.occupancy[i];
    uni += a.occupancy[i] || b.occupancy[i];
  }
  return uni ? static_cast<double>(inter) / uni : 1.0;
}

}  // namespace

TEST_CASE("align turns the long side onto x") {
  std::mt19937_64 rng(1);
  const auto a = align(random_box(rng, Point3(1.0, 4.0, 1.0), 2000));
  CHECK(std::abs(std::abs(a.angle) - std::numbers::pi / 2) < 0.1);
  const auto ext = geom::bounding_box(a.points).extent();
  CHECK(ext.x() > 3.5);
  CHECK(ext.y() < 1.5);
}

TEST_CASE("align flips so the heavy half lies at negative y") {
  std::mt19937_64 rng(2);
  const auto a = align(heavy_strip(rng, 3000));
  CHECK(a.flipped);
  CHECK(std::abs(std::abs(a.angle) - std::numbers::pi) < 0.05);
  std::size_t neg = 0, pos = 0;
  for (const auto& p : a.points) neg += p.y() < 0, pos += p.y() > 0;
  CHECK(neg > pos);
}

TEST_CASE("aligning an aligned cloud is the identity") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto pts = random_box(rng, Point3(3.0, 1.0, 1.0), 500);
    pts = geom::RigidTransform::from_yaw(std::uniform_real_distribution<double>(-3, 3)(rng)).apply(pts);
    const auto once = align(pts);
    const auto twice = align(once.points);
    CHECK(std::abs(twice.angle) < 1e-9);
    CHECK_FALSE(twice.flipped);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK((twice.points[i] - once.points[i]).norm() < 1e-9);
  }
}

TEST_CASE("degenerate x-y spread keeps identity alignment") {
  const PointCloud column{Point3(1, 1, 0), Point3(1, 1, 1), Point3(1, 1, 2)};
  const auto a = align(column);
  CHECK(a.degenerate);
  CHECK(a.angle == 0.0);
}

TEST_CASE("single point occupies the centre cell") {
  const auto v = voxelize({Point3(5, -2, 1)});
  CHECK(v.occupied() == 1);
  CHECK(v.occupancy[grid_offset(16, 16, 8)] == 1);
  CHECK(v.voxel_sides == Point3::Constant(0.1));
}

TEST_CASE("a box that exactly fits the minimum grid keeps 0.1 m sides") {
  std::mt19937_64 rng(4);
  PointCloud pts = random_box(rng, Point3(3.2, 3.2, 1.6), 500);
  for (double sx : {-1.6, 1.6})
    for (double sy : {-1.6, 1.6})
      for (double sz : {-0.8, 0.8}) pts.emplace_back(sx, sy, sz);
  const auto v = voxelize(pts);
  CHECK(v.voxel_sides.x() == 0.1);
  CHECK(v.voxel_sides.y() == 0.1);
  CHECK(v.voxel_sides.z() == 0.1);
}

TEST_CASE("long segment stretches one axis and matches a per-point binning oracle") {
  std::mt19937_64 rng(5);
  const auto pts = random_box(rng, Point3(12.8, 1.0, 0.8), 3000);
  const auto v = voxelize(pts);
  const Point3 ext = geom::bounding_box(pts).extent();
  CHECK(v.voxel_sides.x() == doctest::Approx(ext.x() / 32).epsilon(1e-12));
  CHECK(v.voxel_sides.x() == doctest::Approx(0.4).epsilon(0.01));
  CHECK(v.voxel_sides.y() == 0.1);
  CHECK(v.voxel_sides.z() == 0.1);

  // Oracle: scan cell slabs for the one whose half-open interval contains the coordinate.
  const Point3 c = geom::centroid(pts);
  std::vector<std::uint8_t> oracle(kGridVolume, 0);
  for (const auto& p : pts) {
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      idx[a] = p[a] < c[a] ? 0 : kGridCells[a] - 1;
      for (int i = 0; i < kGridCells[a]; ++i) {
        const double lo = c[a] + (i - kGridCells[a] / 2) * v.voxel_sides[a];
        if (p[a] >= lo && p[a] < lo + v.voxel_sides[a]) idx[a] = i;
      }
    }
    oracle[grid_offset(idx[0], idx[1], idx[2])] = 1;
  }
  CHECK(oracle == v.occupancy);
}

TEST_CASE("voxel sides and occupied ranges bound the true extents within one voxel") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dim(0.3, 8.0);
  for (int t = 0; t < 30; ++t) {
    const Point3 dims(dim(rng), dim(rng), 0.5 * dim(rng));
    const auto pts = random_box(rng, dims, 800);
    const auto v = voxelize(pts);
    const Point3 ext = geom::bounding_box(pts).extent();
    for (int a = 0; a < 3; ++a) {
      CHECK(v.voxel_sides[a] >= 0.1);
      int lo = 1 << 30, hi = -1;
      for (int i = 0; i < kGridCells[0]; ++i)
        for (int j = 0; j < kGridCells[1]; ++j)
          for (int k = 0; k < kGridCells[2]; ++k)
            if (v.occupancy[grid_offset(i, j, k)]) {
              const int c = a == 0 ? i : a == 1 ? j : k;
              lo = std::min(lo, c), hi = std::max(hi, c);
            }
      const double recon = (hi - lo + 1) * v.voxel_sides[a];
      CHECK(recon >= ext[a] - 1e-9);
      CHECK(recon <= ext[a] + 2 * v.voxel_sides[a] + 1e-9);
    }
  }
}

TEST_CASE("voxelized grids are stable under a random yaw of the input") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> yaw(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> dim(1.0, 4.0);
  for (int t = 0; t < 20; ++t) {
    const Point3 dims(1.8 * dim(rng), dim(rng), dim(rng));
    const auto a = box_surface(rng, dims, 6000);
    const auto b = geom::RigidTransform::from_yaw(yaw(rng), Point3(10, -3, 0)).apply(a);
    segmentation::SegmentObservation oa, ob;
    oa.points = a;
    ob.points = b;
    CHECK(iou(prepare(oa), prepare(ob)) >= 0.6);
  }
}

TEST_CASE("flip rule holds on random clouds") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    PointCloud pts;
    for (int i = 0; i < 101; ++i) pts.emplace_back(2 * g(rng), g(rng) + (i % 4 == 0 ? 2.0 : 0.0), g(rng));
    const auto a = align(pts);
    std::size_t neg = 0, pos = 0;
    for (const auto& p : a.points) neg += p.y() < 0, pos += p.y() > 0;
    CHECK(neg >= pos);
  }
}

TEST_CASE("devoxelize places cells back in the original frame") {
  segmentation::SegmentObservation obs;
  std::mt19937_64 rng(9);
  obs.points = geom::RigidTransform::from_yaw(0.7, Point3(20, 5, 1)).apply(random_box(rng, Point3(4, 1, 1), 4000));
  const auto v = prepare(obs);
  std::vector<double> prob(v.occupancy.begin(), v.occupancy.end());
  const auto recon = devoxelize(v, prob);
  CHECK(recon.size() == v.occupied());
  for (const auto& p : recon) {
    double best = 1e9;
    for (const auto& q : obs.points) best = std::min(best, (p - q).norm());
    CHECK(best < v.voxel_sides.maxCoeff());
  }
}

TEST_CASE("augment without copies returns the original") {
  std::mt19937_64 rng(10);
  const auto pts = random_box(rng, Point3(2, 1, 1), 300);
  std::mt19937_64 aug_rng(1);
  const auto out = augment(pts, AugmentParams{0, 2 * std::numbers::pi, 0, 20, 0.5}, aug_rng);
  REQUIRE(out.clouds.size() == 1);
  CHECK(out.clouds[0] == align(pts).points);
}

TEST_CASE("sliced copies keep at least half the points and are seed deterministic") {
  std::mt19937_64 rng(11);
  const auto pts = random_box(rng, Point3(3, 2, 1), 1000);
  const AugmentParams params{3, 2 * std::numbers::pi, 10, 20, 0.5};
  std::mt19937_64 r1(42), r2(42);
  const auto a = augment(pts, params, r1);
  const auto b = augment(pts, params, r2);
  CHECK(a.clouds.size() + a.skipped_slices == 1 + 3 + 10);
  for (std::size_t c = 4; c < a.clouds.size(); ++c) {
    CHECK(a.clouds[c].size() >= 500);
    CHECK(a.clouds[c].size() < 1000);
  }
  REQUIRE(a.clouds.size() == b.clouds.size());
  for (std::size_t c = 0; c < a.clouds.size(); ++c) {
    REQUIRE(a.clouds[c].size() == b.clouds[c].size());
    CHECK(std::memcmp(a.clouds[c].data(), b.clouds[c].data(), a.clouds[c].size() * sizeof(Point3)) == 0);
  }
}

TEST_CASE("unsliceable segments count skipped copies") {
  const PointCloud twin{Point3(0, 0, 0), Point3(0, 0, 0)};
  std::mt19937_64 rng(3);
  const auto out = augment(twin, AugmentParams{0, 1.0, 4, 20, 0.5}, rng);
  CHECK(out.clouds.size() == 1);
  CHECK(out.skipped_slices == 4);
}
