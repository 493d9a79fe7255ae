#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icps/geometry.hpp"
#include "icps/model.hpp"

namespace icps {

/// Side data embedded in the checkpoint's config text: the classifier
/// carries its scene-name table, the regressor its scene identity and
/// the normalization bounds needed to report positions in meters.
struct CheckpointMeta {
  std::vector<std::string> scene_names;           // classifier only
  int scene_id = -1;                              // regressor only
  std::string scene_name;                         // regressor only
  std::optional<NormalizationBounds> norm_bounds; // regressor only
};

struct LoadedModel {
  CnnModel model;
  CheckpointMeta meta;
};

// File layout: magic "ICPS", u32-LE format version (currently 1), one
// model-kind byte, u32-LE length-prefixed UTF-8 config text, then one
// record per tensor until EOF: u32-LE name length, name, u32-LE rank,
// u32-LE dims, raw little-endian f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const CnnModel& model, const CheckpointMeta& meta,
                     const std::string& path);

LoadedModel load_checkpoint(const std::string& path);
LoadedModel load_checkpoint(const std::string& path, ModelKind expected);

}  // namespace icps
