#include <cmath>
#include <random>

#include "doctest.h"
#include "segloc/eval/metrics.hpp"
#include "support/oracles.hpp"

using namespace segloc;
using namespace segloc::eval;
using testing::monte_carlo_iou;
using testing::random_blob;

namespace {

PointCloud box_corners(const Point3& lo, const Point3& hi) {
  PointCloud c;
  for (int m = 0; m < 8; ++m) c.emplace_back(m & 1 ? hi.x() : lo.x(), m & 2 ? hi.y() : lo.y(), m & 4 ? hi.z() : lo.z());
  return c;
}

SegmentTrack track_of(SegmentId id, const std::vector<PointCloud>& obs) {
  SegmentTrack t;
  t.id = id;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    segmentation::SegmentObservation o;
    o.segment_id = id;
    o.index = static_cast<std::uint32_t>(i);
    o.points = obs[i];
    o.centroid = geom::centroid(obs[i]);
    t.observations.push_back(o);
  }
  return t;
}

// Mann-Whitney form of the AUC: P(d_pos < d_neg) + P(d_pos == d_neg) / 2.
double pairwise_auc(const std::vector<ScoredPair>& pairs) {
  double wins = 0.0, total = 0.0;
  for (const auto& p : pairs)
    if (p.positive)
      for (const auto& n : pairs)
        if (!n.positive) {
          total += 1.0;
          wins += p.distance < n.distance ? 1.0 : p.distance == n.distance ? 0.5 : 0.0;
        }
  return wins / total;
}

}  // namespace

TEST_CASE("hull iou closed forms") {
  const auto a = geom::convex_hull(box_corners(Point3(0, 0, 0), Point3(1, 1, 1)));
  const auto b = geom::convex_hull(box_corners(Point3(0.5, 0, 0), Point3(1.5, 1, 1)));
  CHECK(*hull_iou(a, a) == doctest::Approx(1.0));
  CHECK(*hull_iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(*hull_iou(a, b) == *hull_iou(b, a));
  const auto flat = geom::convex_hull({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(1, 1, 0)});
  CHECK_FALSE(hull_iou(a, flat).has_value());
}

TEST_CASE("rasterized iou agrees with a Monte-Carlo oracle and converges") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> r(0.6, 2.0), off(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Point3 ca(0, 0, 0), cb(off(rng), off(rng), 0.5 * off(rng));
    const auto a = geom::convex_hull(random_blob(rng, ca, Point3(r(rng), r(rng), r(rng)), 40));
    const auto b = geom::convex_hull(random_blob(rng, cb, Point3(r(rng), r(rng), r(rng)), 40));
    const double fine = *hull_iou(a, b, 0.1);
    const double mc = monte_carlo_iou(a, b, 1000000, 1234 + t);
    CHECK_MESSAGE(std::abs(fine - mc) <= 0.03, "pair " << t << " raster " << fine << " mc " << mc);
    CHECK(std::abs(*hull_iou(a, b, 0.2) - fine) < 0.05);
  }
}

TEST_CASE("correspondences from last observations") {
  std::mt19937_64 rng(22);
  const PointCloud obj = random_blob(rng, Point3(5, 5, 1), Point3(1, 0.5, 0.8), 200);
  PointCloud shifted = obj;
  for (auto& p : shifted) p += Point3(0.1, 0.0, 0.0);
  const std::vector<SegmentTrack> tracks{
      track_of(4, {obj}), track_of(9, {shifted}), track_of(2, {random_blob(rng, Point3(40, 0, 1), Point3(1, 1, 1), 100)}),
      track_of(7, {{Point3(5, 5, 0), Point3(6, 5, 0), Point3(5, 6, 0), Point3(6, 6, 0), Point3(5.5, 5.5, 0)}})};
  const auto r = generate_correspondences(tracks);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].a == 4);
  CHECK(r.pairs[0].b == 9);
  CHECK(r.pairs[0].ratio > 0.8);
  CHECK(r.degenerate_skipped == 2);
}

TEST_CASE("roc pair construction") {
  std::mt19937_64 rng(23);
  std::vector<SegmentTrack> tracks;
  auto blob = [&](double x) { return random_blob(rng, Point3(x, 0, 0), Point3(0.5, 0.5, 0.5), 20); };
  tracks.push_back(track_of(1, {blob(0), blob(0), blob(0)}));
  tracks.push_back(track_of(2, {blob(0.2), blob(0.2), blob(0.2), blob(0.2)}));
  for (int k = 0; k < 6; ++k) tracks.push_back(track_of(10 + k, {blob(30.0 + 25.0 * k), blob(30.0 + 25.0 * k)}));
  const std::vector<Correspondence> corr{{1, 2, 0.9}};

  const auto pairs = build_roc_pairs(corr, tracks, {10, 20.0, 5});
  std::size_t pos = 0, neg = 0;
  std::set<std::pair<ObservationRef, ObservationRef>> seen;
  std::map<SegmentId, Point3> centroid;
  for (const auto& t : tracks) centroid[t.id] = t.last().centroid;
  for (const auto& p : pairs) {
    (p.positive ? pos : neg)++;
    if (!p.positive) {
      CHECK((centroid[p.a.track] - centroid[p.b.track]).norm() > 20.0);
      CHECK(seen.insert({p.a, p.b}).second);
    }
  }
  CHECK(pos == 12);
  CHECK(neg == 120);
  CHECK_THROWS_AS(build_roc_pairs(corr, tracks, {1000, 20.0, 5}), std::runtime_error);
}

TEST_CASE("roc curve and auc") {
  std::mt19937_64 rng(24);
  std::vector<ScoredPair> sep;
  for (int i = 0; i < 50; ++i) sep.push_back({0.1 * i, true});
  for (int i = 0; i < 50; ++i) sep.push_back({10.0 + i, false});
  CHECK(roc(sep).auc == doctest::Approx(1.0));

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredPair> rnd;
  for (int i = 0; i < 40000; ++i) rnd.push_back({u(rng), i % 2 == 0});
  CHECK(std::abs(roc(rnd).auc - 0.5) <= 0.02);

  // Coarse scores force ties; compare with the pairwise definition.
  std::vector<ScoredPair> tied;
  std::uniform_int_distribution<int> level(0, 6);
  for (int i = 0; i < 400; ++i) {
    const bool positive = i % 3 == 0;
    tied.push_back({static_cast<double>(level(rng) + (positive ? 0 : 2)), positive});
  }
  const auto curve = roc(tied);
  CHECK(curve.auc == doctest::Approx(pairwise_auc(tied)).epsilon(1e-12));
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
    CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
  }
  CHECK(curve.points.back().tpr == 1.0);
  CHECK(curve.points.back().fpr == 1.0);

  std::vector<ScoredPair> transformed = tied;
  for (auto& p : transformed) p.distance = std::exp(3.0 * p.distance) - 7.0;
  CHECK(roc(transformed).auc == doctest::Approx(curve.auc).epsilon(1e-12));
  CHECK_THROWS_AS(roc({}), std::invalid_argument);
}

TEST_CASE("rank versus completeness") {
  const std::vector<std::pair<SegmentId, std::vector<double>>> map{
      {1, {0.0, 0.0}}, {2, {1.0, 0.0}}, {3, {0.0, 2.0}}, {4, {3.0, 3.0}}};
  CHECK(rank_of({0.0, 0.0}, 1, map) == 1);
  CHECK(rank_of({0.0, 0.0}, 3, map) == 3);
  // Equal distance is not strictly closer.
  CHECK(rank_of({0.5, 0.0}, 2, map) == 1);
  const std::vector<RankQuery> q{{{0.0, 2.0}, 1.0, 3}, {{0.0, 0.1}, 0.35, 3}, {{0.0, 1.2}, 0.31, 3}, {{0.9, 0.0}, 0.05, 2}};
  const auto bins = rank_vs_completeness(q, map);
  REQUIRE(bins.size() == 3);
  CHECK(bins[0].lower == 0.0);
  CHECK(bins[0].median_rank == 1.0);
  CHECK(bins[1].lower == doctest::Approx(0.3));
  CHECK(bins[1].median_rank == 2.0);  // ranks 3 and 1
  CHECK(bins[2].lower == doctest::Approx(0.9));
  CHECK(bins[2].median_rank == 1.0);
}

TEST_CASE("reconstruction ratio") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud a;
  for (int i = 0; i < 500; ++i) a.emplace_back(u(rng), u(rng), u(rng));
  const Point3 sides(0.1, 0.2, 0.1);
  CHECK(reconstruction_ratio(a, a, sides).ratio == 1.0);
  PointCloud far = a, jitter = a;
  for (auto& p : far) p += Point3(10 * 0.2 + 2.0, 0, 0);
  for (auto& p : jitter) {
    Point3 d(u(rng), u(rng), u(rng));
    p += 0.5 * 0.2 * d.normalized();
  }
  CHECK(reconstruction_ratio(a, far, sides).ratio == 0.0);
  CHECK(reconstruction_ratio(a, jitter, sides).ratio == 1.0);
  PointCloud part(a.begin(), a.begin() + 100);
  CHECK(reconstruction_ratio(a, part, sides).ratio == reconstruction_ratio(part, a, sides).ratio);
  const auto empty = reconstruction_ratio(a, {}, sides);
  CHECK(empty.empty);
  CHECK(empty.ratio == 0.0);
}

TEST_CASE("compression arithmetic") {
  const auto r = compression_from_totals(16.8e6, 386.2e3, 1341, 284);
  CHECK(*r.ratio == doctest::Approx(43.5).epsilon(0.01));
  CHECK(*r.ratio_excl == doctest::Approx(55.2).epsilon(0.01));

  const auto empty = compression_report({}, 64, {descriptors::SemanticClass::vehicle});
  CHECK_FALSE(empty.ratio.has_value());
  CHECK_FALSE(empty.ratio_excl.has_value());

  const std::vector<MapSegmentSummary> map{{1000, descriptors::SemanticClass::vehicle}, {3000, std::nullopt},
                                           {500, descriptors::SemanticClass::building}};
  const auto m = compression_report(map, 64, {descriptors::SemanticClass::vehicle});
  CHECK(m.raw_bytes == 4500.0 * 12);
  CHECK(m.compressed_bytes == 3.0 * (64 * 4 + 36));
  CHECK(m.compressed_bytes_excl == 2.0 * (64 * 4 + 36));
  CHECK(*m.ratio_excl == doctest::Approx(54000.0 / 584.0));
}
