#pragma once

#include <cstdint>
#include <utility>

#include "icps/geometry.hpp"
#include "icps/image.hpp"
#include "icps/trajectory.hpp"  // SceneSpec

namespace icps {

struct CameraIntrinsics {
  double hfov_deg = 60.0;  // horizontal field of view, (10,170)
};

struct ColorRGB {
  double r = 0.0, g = 0.0, b = 0.0;  // linear, [0,1] after clamping
};

// Interior faces of the room box, in tie-break priority order:
// 0 min-x, 1 max-x, 2 min-y, 3 max-y, 4 min-z, 5 max-z.
struct FaceHit {
  int face = 0;
  Vec3 point;
};

/// Nearest interior face hit by a ray starting strictly inside the box.
/// The hit coordinate on the face axis is snapped exactly onto the plane;
/// a ray aimed at an edge or corner resolves to the lowest face id.
FaceHit intersect_room_box(const Vec3& origin, const Vec3& direction,
                           const NormalizationBounds& bounds);

/// Seed-derived flat color of one face, before checker and gradient.
ColorRGB texture_base_color(int face, std::uint64_t appearance_seed);

/// Low-frequency component: two channels ramp linearly along the face's
/// in-plane world axes at a fixed slope of 0.035 per meter.
ColorRGB texture_gradient(int face, const Vec3& hit);

/// Full per-face pattern: base color + seeded checker + linear gradient,
/// clamped to [0,1]. Continuous except at checker cell edges.
ColorRGB procedural_texture(int face, const Vec3& hit,
                            std::uint64_t appearance_seed);

/// Round half away from zero to the 8-bit scale.
std::uint8_t quantize_channel(double v);

/// Pinhole raycast of the procedurally textured room. Pure function of
/// its inputs: identical calls give bitwise-identical buffers.
ImageRGB render(const SceneSpec& scene, const Pose& pose,
                const CameraIntrinsics& intrinsics, int width, int height);

}  // namespace icps
