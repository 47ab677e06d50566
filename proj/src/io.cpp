#include "handpose/io.hpp"

#include "handpose/errors.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace handpose {

namespace fs = std::filesystem;

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

CloudFileFormat format_for_path(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".ply" ? CloudFileFormat::PlyAscii : CloudFileFormat::XyzText;
}

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

Vec3 parse_point_line(const std::string& line, const std::string& path, std::size_t line_no) {
  std::istringstream ss(line);
  double x, y, z;
  if (!(ss >> x >> y >> z)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": expected three numeric fields");
  }
  std::string extra;
  if (ss >> extra) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": expected three numeric fields");
  }
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": non-finite coordinate");
  }
  return Vec3(x, y, z);
}

PointCloud read_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line) || line[line.find_first_not_of(" \t")] == '#') continue;
    cloud.push_back(parse_point_line(line, path, line_no));
  }
  return cloud;
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!is_blank(line)) return true;
    }
    return false;
  };

  if (!next_line() || line.substr(0, 3) != "ply") {
    throw ParseError(path + ": not a PLY file (missing 'ply' magic)");
  }

  std::size_t vertex_count = 0;
  bool saw_format = false;
  bool in_vertex_element = false;
  std::vector<std::string> vertex_properties;
  while (next_line()) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string kind, version;
      ss >> kind >> version;
      if (kind != "ascii") {
        throw ParseError(path + ": only ascii PLY is supported (got format '" + kind + "')");
      }
      saw_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) vertex_count = count;
    } else if (tok == "property") {
      if (in_vertex_element) {
        std::string type, name;
        ss >> type >> name;
        vertex_properties.push_back(name);
      }
    } else if (tok == "end_header") {
      break;
    } else {
      throw ParseError(path + ":" + std::to_string(line_no) + ": unexpected header line '" + tok + "'");
    }
  }
  if (!saw_format) throw ParseError(path + ": missing PLY format line");
  if (vertex_properties != std::vector<std::string>{"x", "y", "z"}) {
    throw ParseError(path + ": vertex element must carry exactly the x, y, z properties");
  }

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!next_line()) {
      throw ParseError(path + ": unexpected end of file, expected " + std::to_string(vertex_count) +
                       " vertices");
    }
    cloud.push_back(parse_point_line(line, path, line_no));
  }
  return cloud;
}

}  // namespace

PointCloud read_cloud(const std::string& path, CloudFileFormat format) {
  return format == CloudFileFormat::PlyAscii ? read_ply(path) : read_xyz(path);
}

PointCloud read_cloud(const std::string& path) { return read_cloud(path, format_for_path(path)); }

void write_cloud(const PointCloud& cloud, const std::string& path, CloudFileFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  if (format == CloudFileFormat::PlyAscii) {
    out << "ply\n"
        << "format ascii 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property float x\n"
        << "property float y\n"
        << "property float z\n"
        << "end_header\n";
  }
  for (const Vec3& p : cloud) {
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z())
        << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_cloud(const PointCloud& cloud, const std::string& path) {
  write_cloud(cloud, path, format_for_path(path));
}

const char* to_string(ModelCategory c) {
  switch (c) {
    case ModelCategory::Gesture: return "gesture";
    case ModelCategory::Object: return "object";
    case ModelCategory::Interaction: return "interaction";
  }
  return "gesture";
}

ModelCategory category_from_string(const std::string& s) {
  if (s == "gesture") return ModelCategory::Gesture;
  if (s == "object") return ModelCategory::Object;
  if (s == "interaction") return ModelCategory::Interaction;
  throw ParseError("unknown model category '" + s + "'");
}

ModelManifest read_manifest(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  const nlohmann::json& models = root.at("models");
  root.done();
  if (!models.is_array()) throw ParseError(path + ": 'models' must be an array");
  if (models.empty()) throw ParseError(path + ": no models");

  const fs::path base = fs::path(path).parent_path();
  ModelManifest manifest;
  std::set<std::string> names;
  for (const auto& m : models) {
    JsonObject entry(m, path + ": model entry");
    ModelEntry e;
    e.name = json_string(entry.at("name"), path + ": name");
    e.category = category_from_string(json_string(entry.at("category"), path + ": category"));
    e.path = (base / json_string(entry.at("path"), path + ": path")).string();
    entry.done();
    if (e.name.empty() || e.name.find_first_of(",\n") != std::string::npos) {
      throw ParseError(path + ": invalid model name '" + e.name + "'");
    }
    if (!names.insert(e.name).second) {
      throw ParseError(path + ": duplicate model name '" + e.name + "'");
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

bool ModelLibrary::has_category(ModelCategory c) const {
  return std::any_of(models.begin(), models.end(),
                     [c](const LibraryModel& m) { return m.category == c; });
}

const LibraryModel* ModelLibrary::find(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

ModelLibrary load_model_library(const std::string& manifest_path) {
  const ModelManifest manifest = read_manifest(manifest_path);
  ModelLibrary lib;
  for (const ModelEntry& e : manifest.entries) {
    LibraryModel m;
    m.name = e.name;
    m.category = e.category;
    m.cloud = read_cloud(e.path);
    if (m.cloud.empty()) throw ParseError(e.path + ": model cloud '" + e.name + "' is empty");
    lib.models.push_back(std::move(m));
  }
  return lib;
}

namespace {

// Exact round-trip formatting, used only where a value is validated on read
// (rotation orthonormality, unit normals); 9 digits would quantize past the
// 1e-9 tolerance.
std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_transform(const RigidTransform& T, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "{\n  \"r\": [";
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) out << (i + k ? ", " : "") << format_exact(T.R(i, k));
  }
  out << "],\n  \"t\": [" << format_exact(T.t.x()) << ", " << format_exact(T.t.y()) << ", "
      << format_exact(T.t.z()) << "]\n}\n";
  if (!out) throw IoError("write failed for " + path);
}

RigidTransform read_transform(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  const auto& r = root.at("r");
  const auto& t = root.at("t");
  root.done();
  if (!r.is_array() || r.size() != 9) throw ParseError(path + ": 'r' must hold 9 numbers (row-major)");
  Mat3 R;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) R(i, k) = json_double(r[3 * i + k], path);
  }
  return RigidTransform(R, json_vec3(t, path + ": t"));
}

void write_plane(const PlaneModel& plane, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "{\n  \"n\": [" << format_exact(plane.n.x()) << ", " << format_exact(plane.n.y()) << ", "
      << format_exact(plane.n.z()) << "],\n  \"d\": " << format_exact(plane.d) << "\n}\n";
  if (!out) throw IoError("write failed for " + path);
}

PlaneModel read_plane(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  PlaneModel plane;
  plane.n = json_vec3(root.at("n"), path + ": n");
  plane.d = json_double(root.at("d"), path + ": d");
  root.done();
  if (std::abs(plane.n.norm() - 1.0) > 1e-9) throw ParseError(path + ": normal must be unit length");
  return plane;
}

void write_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (int l : labels) out << l << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace handpose
