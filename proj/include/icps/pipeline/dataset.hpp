#pragma once

#include <cstdint>
#include <string>

#include "icps/image.hpp"
#include "icps/pipeline/manifest.hpp"
#include "icps/scene.hpp"
#include "icps/trajectory.hpp"

namespace icps {

struct RenderSettings {
  int width = 32;
  int height = 32;
  CameraIntrinsics intrinsics;
};

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// The only augmentations that leave the pose label valid: additive
// gaussian noise, a global brightness shift and per-channel shifts.
// The type has no geometric fields by construction.
struct AugmentationPolicy {
  bool enable_noise = true;
  double noise_sigma = 4.0;  // 8-bit scale
  bool enable_brightness = true;
  double brightness_min = -12.0;
  double brightness_max = 12.0;
  bool enable_channel_shift = true;
  double channel_shift_min = -8.0;
  double channel_shift_max = 8.0;
};

/// Renders every pose of every (scene, style) cell into out_dir/images/
/// and writes out_dir/manifest.json. Deterministic for fixed seeds.
DatasetManifest build_dataset(const std::vector<SceneSpec>& scenes,
                              const CompositionTable& table,
                              const TrajectoryConfig& traj_cfg,
                              const RenderSettings& render_cfg,
                              const std::string& out_dir);

/// Stratified per scene: each scene's samples are shuffled by seed, then
/// floor(train*n) go to train, floor(val*n) to val, the rest to test.
void split_dataset(DatasetManifest& m, const SplitSpec& spec);

/// Enabled ops apply in fixed order (noise, brightness, channel shift),
/// accumulated in double then clamped to [0,255] and rounded once. The
/// signature has no access to pose labels.
ImageRGB augment(const ImageRGB& img, const AugmentationPolicy& policy,
                 std::uint64_t seed);

/// Computes each scene's normalization bounds from its training split
/// and annotates every sample's normalized position with them.
void compute_class_bounds(DatasetManifest& m);

std::string sanitize_name(const std::string& name);

}  // namespace icps
