#include "segloc/pipeline/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace segloc::pipeline {

namespace {

using geom::Point3;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

template <typename T>
T field(std::string_view s, const std::string& path, std::size_t line) {
  T v{};
  if (!parse(s, v)) throw DataError(path + ":" + std::to_string(line) + ": cannot parse '" + std::string(s) + "'");
  return v;
}

template <typename T>
std::string fmt(T v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

void check_malformed(const IngestReport& r, const std::string& path) {
  if (r.malformed_lines.empty()) return;
  const std::size_t total = r.rows;
  if (static_cast<double>(r.malformed_lines.size()) <= kMaxMalformedFraction * static_cast<double>(total)) return;
  std::string lines;
  for (std::size_t i = 0; i < r.malformed_lines.size() && i < 10; ++i)
    lines += (i ? "," : "") + std::to_string(r.malformed_lines[i]);
  if (r.malformed_lines.size() > 10) lines += ",...";
  throw DataError(path + ": " + std::to_string(r.malformed_lines.size()) + " of " + std::to_string(total) +
                  " rows malformed (lines " + lines + ")");
}

bool parse_xyz(const std::vector<std::string_view>& cols, std::size_t ix, std::size_t iy, std::size_t iz, Point3& p) {
  float v[3];
  const std::size_t idx[3] = {ix, iy, iz};
  for (int a = 0; a < 3; ++a) {
    if (idx[a] >= cols.size() || !parse(cols[idx[a]], v[a]) || !std::isfinite(v[a])) return false;
  }
  p = Point3(v[0], v[1], v[2]);
  return true;
}

IngestReport ingest_csv(const std::string& path) {
  auto in = open_in(path);
  IngestReport r;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = split(t, ',');
    if (first) {
      first = false;
      if (t.find_first_of("xXyYzZ") != std::string_view::npos && t.find_first_of("0123456789") == std::string_view::npos)
        continue;  // header
    }
    ++r.rows;
    Point3 p;
    if (cols.size() == 3 && parse_xyz(cols, 0, 1, 2, p))
      r.points.push_back(p);
    else
      r.malformed_lines.push_back(lineno);
  }
  check_malformed(r, path);
  return r;
}

IngestReport ingest_ply(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw DataError(path + ": unexpected end of PLY header");
    ++lineno;
    return trim(line);
  };
  if (next() != "ply") throw DataError(path + ": missing 'ply' magic");
  std::size_t vertices = 0;
  bool in_vertex = false, ascii = false;
  std::vector<std::string> props;
  while (true) {
    const std::string_view t = next();
    if (t == "end_header") break;
    std::istringstream ss{std::string(t)};
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string kind;
      ss >> kind;
      ascii = kind == "ascii";
    } else if (word == "element") {
      std::string name;
      ss >> name;
      in_vertex = name == "vertex";
      if (in_vertex && !(ss >> vertices)) throw DataError(path + ":" + std::to_string(lineno) + ": bad vertex count");
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ss >> type;
      if (type == "list") throw DataError(path + ": list properties on vertices are not supported");
      ss >> name;
      props.push_back(name);
    }
  }
  if (!ascii) throw DataError(path + ": only ASCII PLY is supported");
  auto index_of = [&](const char* n) {
    const auto it = std::find(props.begin(), props.end(), n);
    if (it == props.end()) throw DataError(path + ": vertex property '" + std::string(n) + "' missing");
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  IngestReport r;
  while (r.rows < vertices && std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    ++r.rows;
    std::vector<std::string_view> cols;
    for (auto c : split(t, ' '))
      if (!c.empty()) cols.push_back(c);
    Point3 p;
    if (cols.size() == props.size() && parse_xyz(cols, ix, iy, iz, p))
      r.points.push_back(p);
    else
      r.malformed_lines.push_back(lineno);
  }
  if (r.rows < vertices)
    throw DataError(path + ": expected " + std::to_string(vertices) + " vertices, found " + std::to_string(r.rows));
  check_malformed(r, path);
  return r;
}

}  // namespace

IngestReport ingest_cloud_file(const std::string& path, std::optional<CloudFormat> format) {
  if (!format) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "csv" || ext == "txt")
      format = CloudFormat::csv;
    else if (ext == "ply")
      format = CloudFormat::ply;
    else
      throw DataError(path + ": unknown cloud format (expected .csv or .ply)");
  }
  return *format == CloudFormat::csv ? ingest_csv(path) : ingest_ply(path);
}

geom::PointCloud read_cloud(const std::string& path) { return ingest_cloud_file(path).points; }

void write_cloud_csv(const std::string& path, const geom::PointCloud& points) {
  auto out = open_out(path);
  for (const auto& p : points)
    out << fmt(static_cast<float>(p.x())) << ',' << fmt(static_cast<float>(p.y())) << ','
        << fmt(static_cast<float>(p.z())) << '\n';
}

void write_cloud_ply(const std::string& path, const geom::PointCloud& points) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : points)
    out << fmt(static_cast<float>(p.x())) << ' ' << fmt(static_cast<float>(p.y())) << ' '
        << fmt(static_cast<float>(p.z())) << '\n';
}

void write_tracks_csv(const std::string& path, const std::vector<segmentation::SegmentTrack>& tracks) {
  auto out = open_out(path);
  out << "segment_id,observation,timestamp,x,y,z\n";
  for (const auto& t : tracks)
    for (const auto& o : t.observations)
      for (const auto& p : o.points)
        out << t.id << ',' << o.index << ',' << fmt(o.timestamp) << ',' << fmt(p.x()) << ',' << fmt(p.y()) << ','
            << fmt(p.z()) << '\n';
}

std::vector<segmentation::SegmentTrack> read_tracks_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::map<segmentation::SegmentId, segmentation::SegmentTrack> tracks;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#' || (lineno == 1 && t.front() == 's')) continue;
    const auto c = split(t, ',');
    if (c.size() != 6) throw DataError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    const auto id = field<std::uint64_t>(c[0], path, lineno);
    const auto obs = field<std::uint32_t>(c[1], path, lineno);
    auto& track = tracks[id];
    track.id = id;
    if (track.observations.empty() || track.observations.back().index != obs) {
      if (!track.observations.empty() && obs < track.observations.back().index)
        throw DataError(path + ":" + std::to_string(lineno) + ": observations out of order");
      segmentation::SegmentObservation o;
      o.segment_id = id;
      o.index = obs;
      o.timestamp = field<double>(c[2], path, lineno);
      track.observations.push_back(std::move(o));
    }
    track.observations.back().points.emplace_back(field<double>(c[3], path, lineno), field<double>(c[4], path, lineno),
                                                  field<double>(c[5], path, lineno));
  }
  std::vector<segmentation::SegmentTrack> out;
  for (auto& [id, t] : tracks) {
    for (auto& o : t.observations) o.centroid = geom::centroid(o.points);
    out.push_back(std::move(t));
  }
  return out;
}

void write_labels_csv(const std::string& path, const std::map<segmentation::SegmentId, SegmentLabel>& labels) {
  auto out = open_out(path);
  out << "segment_id,label,object_id\n";
  for (const auto& [id, l] : labels) out << id << ',' << descriptors::to_string(l.label) << ',' << l.object_id << '\n';
}

std::map<segmentation::SegmentId, SegmentLabel> read_labels_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::map<segmentation::SegmentId, SegmentLabel> out;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || lineno == 1) continue;
    const auto c = split(t, ',');
    if (c.size() != 3) throw DataError(path + ":" + std::to_string(lineno) + ": expected 3 columns");
    SegmentLabel l;
    try {
      l.label = descriptors::semantic_from_string(std::string(trim(c[1])));
    } catch (const std::invalid_argument& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    l.object_id = field<std::uint32_t>(c[2], path, lineno);
    out[field<std::uint64_t>(c[0], path, lineno)] = l;
  }
  return out;
}

void write_descriptors_csv(const std::string& path, const std::vector<descriptors::Descriptor>& descriptors) {
  auto out = open_out(path);
  out << "segment_id,observation,provider,cx,cy,cz,sx,sy,sz,angle";
  const std::size_t dim = descriptors.empty() ? 0 : descriptors.front().values.size();
  for (std::size_t k = 0; k < dim; ++k) out << ",v" << k;
  out << '\n';
  for (const auto& d : descriptors) {
    out << d.segment_id << ',' << d.observation_index << ',' << descriptors::to_string(d.provider);
    for (int a = 0; a < 3; ++a) out << ',' << fmt(d.centroid[a]);
    for (int a = 0; a < 3; ++a) out << ',' << fmt(d.voxel_sides[a]);
    out << ',' << fmt(d.angle);
    for (double v : d.values) out << ',' << fmt(v);
    out << '\n';
  }
}

std::vector<descriptors::Descriptor> read_descriptors_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<descriptors::Descriptor> out;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || lineno == 1) continue;
    const auto c = split(t, ',');
    if (c.size() < 10) throw DataError(path + ":" + std::to_string(lineno) + ": too few columns");
    descriptors::Descriptor d;
    d.segment_id = field<std::uint64_t>(c[0], path, lineno);
    d.observation_index = field<std::uint32_t>(c[1], path, lineno);
    try {
      d.provider = descriptors::provider_from_string(std::string(trim(c[2])));
    } catch (const std::invalid_argument& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    for (int a = 0; a < 3; ++a) d.centroid[a] = field<double>(c[3 + a], path, lineno);
    for (int a = 0; a < 3; ++a) d.voxel_sides[a] = field<double>(c[6 + a], path, lineno);
    d.angle = field<double>(c[9], path, lineno);
    for (std::size_t k = 10; k < c.size(); ++k) d.values.push_back(field<double>(c[k], path, lineno));
    if (!out.empty() && d.values.size() != out.front().values.size())
      throw DataError(path + ":" + std::to_string(lineno) + ": descriptor dimension changes");
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace segloc::pipeline
