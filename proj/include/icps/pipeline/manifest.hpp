#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icps/geometry.hpp"
#include "icps/trajectory.hpp"

namespace icps {

struct ManifestSample {
  int scene_id = 0;
  int style_index = 0;  // 0..8
  int index = 0;        // position within its (scene, style) cell
  std::string image;    // path relative to the manifest file
  Pose pose;            // raw meters + unit canonical quaternion
  std::optional<Vec3> norm_pos;  // filled once class bounds exist
  std::string split;    // "", "train", "val" or "test"
};

struct ManifestScene {
  SceneSpec spec;
  // Min/max of the scene's *training* positions; validation and test are
  // normalized with these same bounds.
  std::optional<NormalizationBounds> norm_bounds;
};

struct DatasetManifest {
  int image_width = 0;
  int image_height = 0;
  double hfov_deg = 60.0;
  std::vector<ManifestScene> scenes;
  std::vector<ManifestSample> samples;

  const ManifestScene& scene_by_id(int id) const;
  bool has_split() const;
};

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace icps
