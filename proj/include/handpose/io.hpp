#pragma once

#include "handpose/geometry.hpp"
#include "handpose/plane.hpp"

#include <string>
#include <vector>

namespace handpose {

enum class CloudFileFormat { XyzText, PlyAscii };

/// ".ply" (case-insensitive) maps to PLY-ascii, anything else to XYZ text.
CloudFileFormat format_for_path(const std::string& path);

/// XYZ text: one point per line, three whitespace-separated decimal fields in
/// meters, '#' comment lines and blank lines skipped. PLY: ascii 1.0 only,
/// vertex element with x,y,z properties; binary PLY is rejected.
PointCloud read_cloud(const std::string& path, CloudFileFormat format);
PointCloud read_cloud(const std::string& path);

void write_cloud(const PointCloud& cloud, const std::string& path, CloudFileFormat format);
void write_cloud(const PointCloud& cloud, const std::string& path);

/// Fixed 9-significant-digit formatting used by every text writer, pinned so
/// identical runs produce byte-identical files.
std::string format_double(double v);

enum class ModelCategory { Gesture, Object, Interaction };

const char* to_string(ModelCategory c);
ModelCategory category_from_string(const std::string& s);

struct ModelEntry {
  std::string name;
  ModelCategory category = ModelCategory::Gesture;
  std::string path;  // resolved relative to the manifest file
};

struct ModelManifest {
  std::vector<ModelEntry> entries;
};

ModelManifest read_manifest(const std::string& path);

struct LibraryModel {
  std::string name;
  ModelCategory category = ModelCategory::Gesture;
  PointCloud cloud;
};

/// Prototype clouds with categories. Per-model pose state starts at identity
/// and lives in the pipeline, not here.
struct ModelLibrary {
  std::vector<LibraryModel> models;

  bool has_category(ModelCategory c) const;
  const LibraryModel* find(const std::string& name) const;
};

ModelLibrary load_model_library(const std::string& manifest_path);

void write_transform(const RigidTransform& T, const std::string& path);
RigidTransform read_transform(const std::string& path);

void write_plane(const PlaneModel& plane, const std::string& path);
PlaneModel read_plane(const std::string& path);

void write_labels(const std::vector<int>& labels, const std::string& path);

}  // namespace handpose
