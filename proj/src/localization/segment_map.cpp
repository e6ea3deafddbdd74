#include "segloc/localization/segment_map.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace segloc::localization {

void GlobalSegmentMap::update(const MapEntry& entry) {
  const std::size_t dim = dimension();
  if (dim != 0 && entry.descriptor.values.size() != dim)
    throw std::invalid_argument("update_map: descriptor dimension " + std::to_string(entry.descriptor.values.size()) +
                                " does not match map dimension " + std::to_string(dim));
  auto it = entries_.find(entry.id);
  if (it != entries_.end() && entry.observation_index < it->second.observation_index)
    throw std::invalid_argument("update_map: stale observation " + std::to_string(entry.observation_index) +
                                " for segment " + std::to_string(entry.id) + " (have " +
                                std::to_string(it->second.observation_index) + ")");
  entries_[entry.id] = entry;
}

void GlobalSegmentMap::update(const segmentation::SegmentTrack& track, const Descriptor& descriptor, RobotId robot) {
  if (track.observations.empty()) throw std::invalid_argument("update_map: track has no observations");
  const auto& last = track.last();
  MapEntry e;
  e.id = track.id;
  e.centroid = last.centroid;
  e.descriptor = descriptor;
  e.semantic = descriptor.semantic;
  e.robot = robot;
  e.observation_index = last.index;
  e.timestamp = last.timestamp;
  e.point_count = last.points.size();
  update(e);
}

const MapEntry* GlobalSegmentMap::find(SegmentId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t GlobalSegmentMap::dimension() const {
  return entries_.empty() ? 0 : entries_.begin()->second.descriptor.values.size();
}

std::vector<Candidate> retrieve_candidates(const GlobalSegmentMap& map, const std::vector<Descriptor>& queries,
                                           std::size_t k, const std::set<SemanticClass>& exclude) {
  std::vector<const MapEntry*> pool;
  for (const auto& [id, e] : map.entries())
    if (!(e.semantic && exclude.count(*e.semantic))) pool.push_back(&e);
  std::vector<Candidate> out;
  if (map.empty()) return out;
  const std::size_t dim = map.dimension();
  std::vector<std::pair<double, const MapEntry*>> scored;
  for (const auto& q : queries) {
    if (q.values.size() != dim)
      throw std::invalid_argument("retrieve_candidates: query dimension " + std::to_string(q.values.size()) +
                                  " vs map dimension " + std::to_string(dim));
    scored.clear();
    for (const MapEntry* e : pool) scored.emplace_back(descriptors::l2_distance(q.values, e->descriptor.values), e);
    const std::size_t n = std::min(k, scored.size());
    auto less = [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
    };
    std::partial_sort(scored.begin(), scored.begin() + n, scored.end(), less);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({q.segment_id, scored[i].second->id, scored[i].first, q.centroid, scored[i].second->centroid});
  }
  return out;
}

// ---- file format

namespace {

void put_bytes(std::ostream& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::ostream& out, double v) { put_bytes(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4); }
void put_f64(std::ostream& out, double v) { put_bytes(out, std::bit_cast<std::uint64_t>(v), 8); }

std::uint64_t get_bytes(std::istream& in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("map file: truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
double get_f32(std::istream& in) { return std::bit_cast<float>(static_cast<std::uint32_t>(get_bytes(in, 4))); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_bytes(in, 8)); }

}  // namespace

std::size_t map_record_bytes(std::size_t dim) { return 8 + 12 + 1 + 4 * dim + kMapLinkBytes; }

void write_map(std::ostream& out, const GlobalSegmentMap& map) {
  const std::size_t dim = map.dimension();
  const auto provider = map.empty() ? descriptors::Provider::segmap : map.entries().begin()->second.descriptor.provider;
  out.write("SMAP", 4);
  put_bytes(out, kMapFileVersion, 2);
  put_bytes(out, static_cast<std::uint8_t>(provider), 1);
  put_bytes(out, 0, 1);
  put_bytes(out, dim, 4);
  put_bytes(out, map.size(), 4);
  for (const auto& [id, e] : map.entries()) {
    if (e.descriptor.provider != provider) throw std::invalid_argument("write_map: mixed descriptor providers");
    put_bytes(out, id, 8);
    for (int a = 0; a < 3; ++a) put_f32(out, e.centroid[a]);
    put_bytes(out, e.semantic ? static_cast<std::uint8_t>(*e.semantic) : descriptors::kNoSemantic, 1);
    for (double v : e.descriptor.values) put_f32(out, v);
    // link metadata
    put_bytes(out, e.robot, 4);
    put_bytes(out, e.observation_index, 4);
    put_f64(out, e.timestamp);
    for (int a = 0; a < 3; ++a) put_f32(out, e.descriptor.voxel_sides[a]);
    put_f32(out, e.descriptor.angle);
    put_bytes(out, std::min<std::size_t>(e.point_count, 0xffffffffu), 4);
  }
  if (!out) throw std::runtime_error("write_map: stream error");
}

void write_map_file(const std::string& path, const GlobalSegmentMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_map(out, map);
}

GlobalSegmentMap read_map(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SMAP") throw std::runtime_error("map file: bad magic");
  const auto version = get_bytes(in, 2);
  if (version != kMapFileVersion) throw std::runtime_error("map file: unsupported version " + std::to_string(version));
  const auto provider_tag = get_bytes(in, 1);
  if (provider_tag > 2) throw std::runtime_error("map file: unknown provider tag " + std::to_string(provider_tag));
  get_bytes(in, 1);
  const std::size_t dim = get_bytes(in, 4);
  const std::size_t count = get_bytes(in, 4);
  GlobalSegmentMap map;
  for (std::size_t n = 0; n < count; ++n) {
    MapEntry e;
    e.id = get_bytes(in, 8);
    for (int a = 0; a < 3; ++a) e.centroid[a] = get_f32(in);
    const auto sem = get_bytes(in, 1);
    if (sem != descriptors::kNoSemantic) {
      if (sem >= descriptors::kSemanticClasses) throw std::runtime_error("map file: bad semantic tag");
      e.semantic = static_cast<SemanticClass>(sem);
    }
    e.descriptor.values.resize(dim);
    for (auto& v : e.descriptor.values) v = get_f32(in);
    e.robot = static_cast<RobotId>(get_bytes(in, 4));
    e.observation_index = static_cast<std::uint32_t>(get_bytes(in, 4));
    e.timestamp = get_f64(in);
    for (int a = 0; a < 3; ++a) e.descriptor.voxel_sides[a] = get_f32(in);
    e.descriptor.angle = get_f32(in);
    e.point_count = static_cast<std::size_t>(get_bytes(in, 4));
    e.descriptor.provider = static_cast<descriptors::Provider>(provider_tag);
    e.descriptor.centroid = e.centroid;
    e.descriptor.segment_id = e.id;
    e.descriptor.observation_index = e.observation_index;
    e.descriptor.semantic = e.semantic;
    map.update(e);
  }
  return map;
}

GlobalSegmentMap read_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_map(in);
}

}  // namespace segloc::localization
