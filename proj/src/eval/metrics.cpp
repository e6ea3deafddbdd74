#include "segloc/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace segloc::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// z-interval of the vertical line (x, y) inside the hull; empty when lo > hi.
std::pair<double, double> column_interval(const geom::ConvexHull& h, double x, double y) {
  double lo = -kInf, hi = kInf;
  for (const auto& f : h.faces) {
    const double rhs = f.offset + 1e-9 - f.normal.x() * x - f.normal.y() * y;
    const double nz = f.normal.z();
    if (std::abs(nz) < 1e-12) {
      if (rhs < 0.0) return {1.0, 0.0};
    } else if (nz > 0.0) {
      hi = std::min(hi, rhs / nz);
    } else {
      lo = std::max(lo, rhs / nz);
    }
  }
  return {lo, hi};
}

// Count of k in [0, n) with z0 + (k + 0.5) * r inside [lo, hi].
long long cells_in(double lo, double hi, double z0, double r, long long n) {
  if (lo > hi) return 0;
  const long long first = std::max(0LL, static_cast<long long>(std::ceil((lo - z0) / r - 0.5)));
  const long long last = std::min(n - 1, static_cast<long long>(std::floor((hi - z0) / r - 0.5)));
  return std::max(0LL, last - first + 1);
}

std::string hash_key(long long i, long long j, long long k) {
  return std::to_string(i) + ',' + std::to_string(j) + ',' + std::to_string(k);
}

}  // namespace

std::optional<double> hull_iou(const geom::ConvexHull& a, const geom::ConvexHull& b, double raster) {
  if (a.degenerate || b.degenerate) return std::nullopt;
  geom::Aabb box = a.bounds();
  const geom::Aabb bb = b.bounds();
  box.extend(bb.min);
  box.extend(bb.max);
  const Point3 ext = box.extent();
  const long long nx = std::max(1LL, static_cast<long long>(std::ceil(ext.x() / raster)));
  const long long ny = std::max(1LL, static_cast<long long>(std::ceil(ext.y() / raster)));
  const long long nz = std::max(1LL, static_cast<long long>(std::ceil(ext.z() / raster)));
  long long inter = 0, uni = 0;
  for (long long i = 0; i < nx; ++i) {
    const double x = box.min.x() + (i + 0.5) * raster;
    for (long long j = 0; j < ny; ++j) {
      const double y = box.min.y() + (j + 0.5) * raster;
      const auto [alo, ahi] = column_interval(a, x, y);
      const auto [blo, bhi] = column_interval(b, x, y);
      const long long ca = cells_in(alo, ahi, box.min.z(), raster, nz);
      const long long cb = cells_in(blo, bhi, box.min.z(), raster, nz);
      const long long cab = cells_in(std::max(alo, blo), std::min(ahi, bhi), box.min.z(), raster, nz);
      inter += cab;
      uni += ca + cb - cab;
    }
  }
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

CorrespondenceResult generate_correspondences(const std::vector<SegmentTrack>& tracks,
                                              const CorrespondenceParams& params) {
  CorrespondenceResult out;
  std::vector<std::optional<geom::ConvexHull>> hulls(tracks.size());
  auto hull_of = [&](std::size_t i) -> const geom::ConvexHull& {
    if (!hulls[i]) hulls[i] = geom::convex_hull(tracks[i].last().points);
    return *hulls[i];
  };
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].observations.empty()) continue;
    for (std::size_t j = i + 1; j < tracks.size(); ++j) {
      if (tracks[j].observations.empty()) continue;
      if ((tracks[i].last().centroid - tracks[j].last().centroid).norm() > params.max_centroid_distance) continue;
      const auto iou = hull_iou(hull_of(i), hull_of(j), params.raster);
      if (!iou) {
        ++out.degenerate_skipped;
        continue;
      }
      if (*iou >= params.min_ratio) {
        const auto [a, b] = std::minmax(tracks[i].id, tracks[j].id);
        out.pairs.push_back({a, b, *iou});
      }
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const Correspondence& x, const Correspondence& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  return out;
}

std::vector<ObservationPair> build_roc_pairs(const std::vector<Correspondence>& correspondences,
                                             const std::vector<SegmentTrack>& tracks, const RocPairParams& params) {
  std::map<SegmentId, const SegmentTrack*> by_id;
  for (const auto& t : tracks)
    if (!t.observations.empty()) by_id[t.id] = &t;
  std::vector<ObservationPair> out;
  for (const auto& c : correspondences) {
    const auto ia = by_id.find(c.a), ib = by_id.find(c.b);
    if (ia == by_id.end() || ib == by_id.end()) throw std::invalid_argument("build_roc_pairs: unknown track in correspondence");
    for (std::uint32_t i = 0; i < ia->second->observations.size(); ++i)
      for (std::uint32_t j = 0; j < ib->second->observations.size(); ++j)
        out.push_back({{c.a, i}, {c.b, j}, true});
  }
  const std::size_t positives = out.size();
  const std::size_t wanted = positives * params.negatives_per_positive;
  if (wanted == 0) return out;

  std::vector<std::pair<const SegmentTrack*, const SegmentTrack*>> far;
  std::vector<double> weight;
  double available = 0.0;
  for (auto i = by_id.begin(); i != by_id.end(); ++i)
    for (auto j = std::next(i); j != by_id.end(); ++j)
      if ((i->second->last().centroid - j->second->last().centroid).norm() > params.min_negative_distance) {
        far.emplace_back(i->second, j->second);
        const double w = static_cast<double>(i->second->observations.size() * j->second->observations.size());
        weight.push_back(w);
        available += w;
      }
  if (available < static_cast<double>(wanted))
    throw std::runtime_error("build_roc_pairs: need " + std::to_string(wanted) + " negative pairs but only " +
                             std::to_string(static_cast<std::size_t>(available)) + " exist (shortfall " +
                             std::to_string(wanted - static_cast<std::size_t>(available)) + ")");

  std::mt19937_64 rng(params.seed);
  std::set<std::pair<ObservationRef, ObservationRef>> chosen;
  if (static_cast<double>(wanted) * 2.0 > available) {
    std::vector<std::pair<ObservationRef, ObservationRef>> all;
    for (const auto& [ta, tb] : far)
      for (std::uint32_t i = 0; i < ta->observations.size(); ++i)
        for (std::uint32_t j = 0; j < tb->observations.size(); ++j) all.push_back({{ta->id, i}, {tb->id, j}});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(wanted);
    chosen.insert(all.begin(), all.end());
  } else {
    std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
    while (chosen.size() < wanted) {
      const auto& [ta, tb] = far[pick(rng)];
      const auto i = static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, ta->observations.size() - 1)(rng));
      const auto j = static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, tb->observations.size() - 1)(rng));
      chosen.insert({{ta->id, i}, {tb->id, j}});
    }
  }
  for (const auto& [a, b] : chosen) out.push_back({a, b, false});
  return out;
}

RocCurve roc(const std::vector<ScoredPair>& pairs) {
  std::size_t pos = 0, neg = 0;
  for (const auto& p : pairs) (p.positive ? pos : neg)++;
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc: need both positive and negative pairs");
  std::vector<ScoredPair> sorted = pairs;
  std::sort(sorted.begin(), sorted.end(), [](const ScoredPair& a, const ScoredPair& b) { return a.distance < b.distance; });
  RocCurve curve;
  curve.points.push_back({-kInf, 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].distance;
    for (; i < sorted.size() && sorted[i].distance == t; ++i) (sorted[i].positive ? tp : fp)++;
    curve.points.push_back({t, static_cast<double>(tp) / pos, static_cast<double>(fp) / neg});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return curve;
}

std::size_t rank_of(const std::vector<double>& query, SegmentId target,
                    const std::vector<std::pair<SegmentId, std::vector<double>>>& map) {
  double target_d = kInf;
  for (const auto& [id, d] : map)
    if (id == target) target_d = descriptors::l2_distance(query, d);
  if (!std::isfinite(target_d)) throw std::invalid_argument("rank_of: target not in map");
  std::size_t closer = 0;
  for (const auto& [id, d] : map)
    if (id != target && descriptors::l2_distance(query, d) < target_d) ++closer;
  return closer + 1;
}

std::vector<RankBin> rank_vs_completeness(const std::vector<RankQuery>& queries,
                                          const std::vector<std::pair<SegmentId, std::vector<double>>>& map) {
  std::map<int, std::vector<double>> ranks;
  for (const auto& q : queries) {
    const int bin = std::clamp(static_cast<int>(std::floor(q.completeness * 10.0)), 0, 9);
    ranks[bin].push_back(static_cast<double>(rank_of(q.descriptor, q.target, map)));
  }
  std::vector<RankBin> out;
  for (auto& [bin, r] : ranks) {
    std::sort(r.begin(), r.end());
    const std::size_t n = r.size();
    const double median = n % 2 ? r[n / 2] : 0.5 * (r[n / 2 - 1] + r[n / 2]);
    out.push_back({bin / 10.0, median, n});
  }
  return out;
}

ReconstructionScore reconstruction_ratio(const PointCloud& original, const PointCloud& reconstructed,
                                         const Point3& voxel_sides) {
  if (original.empty() || reconstructed.empty()) return {0.0, true};
  const double tol = voxel_sides.maxCoeff();
  auto directed = [tol](const PointCloud& from, const PointCloud& to) {
    std::unordered_map<std::string, std::vector<const Point3*>> cells;
    auto key = [tol](const Point3& p, int di, int dj, int dk) {
      return hash_key(static_cast<long long>(std::floor(p.x() / tol)) + di,
                      static_cast<long long>(std::floor(p.y() / tol)) + dj,
                      static_cast<long long>(std::floor(p.z() / tol)) + dk);
    };
    for (const auto& p : to) cells[key(p, 0, 0, 0)].push_back(&p);
    std::size_t hit = 0;
    for (const auto& p : from) {
      bool found = false;
      for (int di = -1; di <= 1 && !found; ++di)
        for (int dj = -1; dj <= 1 && !found; ++dj)
          for (int dk = -1; dk <= 1 && !found; ++dk) {
            const auto it = cells.find(key(p, di, dj, dk));
            if (it == cells.end()) continue;
            for (const Point3* q : it->second)
              if ((*q - p).norm() <= tol) {
                found = true;
                break;
              }
          }
      hit += found;
    }
    return static_cast<double>(hit) / from.size();
  };
  return {0.5 * (directed(original, reconstructed) + directed(reconstructed, original)), false};
}

CompressionReport compression_from_totals(double raw_bytes, double compressed_bytes, std::size_t segments,
                                          std::size_t excluded_segments) {
  CompressionReport r;
  r.segments = segments;
  r.excluded_segments = excluded_segments;
  r.raw_bytes = raw_bytes;
  r.compressed_bytes = compressed_bytes;
  r.compressed_bytes_excl =
      segments ? compressed_bytes * static_cast<double>(segments - excluded_segments) / static_cast<double>(segments) : 0.0;
  if (r.compressed_bytes > 0.0) r.ratio = raw_bytes / r.compressed_bytes;
  if (r.compressed_bytes_excl > 0.0) r.ratio_excl = raw_bytes / r.compressed_bytes_excl;
  return r;
}

CompressionReport compression_report(const std::vector<MapSegmentSummary>& map, std::size_t descriptor_dim,
                                     const std::set<descriptors::SemanticClass>& exclude) {
  double raw = 0.0;
  std::size_t excluded = 0;
  for (const auto& s : map) {
    raw += static_cast<double>(s.point_count * kBytesPerPoint);
    if (s.semantic && exclude.contains(*s.semantic)) ++excluded;
  }
  const double per_segment = static_cast<double>(descriptor_dim * 4 + kLinkBytes);
  return compression_from_totals(raw, per_segment * map.size(), map.size(), excluded);
}

namespace {
std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(10);
  return out;
}
}  // namespace

void write_roc_csv(const std::string& path, const RocCurve& curve) {
  auto out = open_csv(path);
  out << "threshold,tpr,fpr\n";
  for (const auto& p : curve.points) {
    if (std::isfinite(p.threshold))
      out << p.threshold;
    else
      out << "-inf";
    out << ',' << p.tpr << ',' << p.fpr << '\n';
  }
}

void write_rank_csv(const std::string& path, const std::vector<RankBin>& bins) {
  auto out = open_csv(path);
  out << "completeness_bin,median_rank\n";
  for (const auto& b : bins) out << b.lower << ',' << b.median_rank << '\n';
}

void write_recon_csv(const std::string& path, const std::vector<std::pair<int, double>>& rows) {
  auto out = open_csv(path);
  out << "descriptor_size,ratio\n";
  for (const auto& [size, ratio] : rows) out << size << ',' << ratio << '\n';
}

void write_compression_csv(const std::string& path, const CompressionReport& r) {
  auto out = open_csv(path);
  out << "raw_bytes,compressed_bytes,ratio,ratio_excl\n";
  out << r.raw_bytes << ',' << r.compressed_bytes << ',';
  if (r.ratio) out << *r.ratio;
  out << ',';
  if (r.ratio_excl) out << *r.ratio_excl;
  out << '\n';
}

}  // namespace segloc::eval
