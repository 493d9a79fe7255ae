#include "icps/scene.hpp"

#include <cmath>
#include <limits>

#include "icps/rng.hpp"
#include "icps/threads.hpp"

namespace icps {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Six flat anchors; every pair differs by 0.4 in at least one channel,
// and the +-0.10 seed modulation keeps any pair at distance >= 0.20
// (well above the 16/255 separability floor).
constexpr double kFaceAnchors[6][3] = {
    {0.70, 0.30, 0.30}, {0.30, 0.70, 0.30}, {0.30, 0.30, 0.70},
    {0.70, 0.70, 0.30}, {0.30, 0.70, 0.70}, {0.70, 0.30, 0.70},
};

constexpr double kGradientSlope = 0.035;  // per meter

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// In-plane world coordinates of a hit on the given face.
std::pair<double, double> face_uv(int face, const Vec3& hit) {
  switch (face / 2) {
    case 0: return {hit.y, hit.z};
    case 1: return {hit.x, hit.z};
    default: return {hit.x, hit.y};
  }
}

}  // namespace

FaceHit intersect_room_box(const Vec3& origin, const Vec3& direction,
                           const NormalizationBounds& bounds) {
  if (direction.x == 0.0 && direction.y == 0.0 && direction.z == 0.0)
    throw ZeroDirection();
  if (!bounds.contains_strict(origin)) throw OriginOutsideBox();

  double best_t = std::numeric_limits<double>::infinity();
  int best_face = -1;
  for (int axis = 0; axis < 3; ++axis) {
    const double d = direction[axis];
    if (d == 0.0) continue;
    const int face = axis * 2 + (d > 0.0 ? 1 : 0);
    const double plane = d > 0.0 ? bounds.max[axis] : bounds.min[axis];
    const double t = (plane - origin[axis]) / d;
    // strict < keeps the lowest face id on exact ties (axis order is id order)
    if (t < best_t) {
      best_t = t;
      best_face = face;
    }
  }
  Vec3 hit = origin + direction * best_t;
  const int axis = best_face / 2;
  hit[axis] = (best_face % 2) ? bounds.max[axis] : bounds.min[axis];
  return {best_face, hit};
}

ColorRGB texture_base_color(int face, std::uint64_t appearance_seed) {
  SplitMix64 rng(derive_seed(appearance_seed, static_cast<std::uint64_t>(face)));
  ColorRGB c;
  c.r = kFaceAnchors[face][0] + rng.next_range(-0.10, 0.10);
  c.g = kFaceAnchors[face][1] + rng.next_range(-0.10, 0.10);
  c.b = kFaceAnchors[face][2] + rng.next_range(-0.10, 0.10);
  return c;
}

ColorRGB texture_gradient(int face, const Vec3& hit) {
  const auto [u, v] = face_uv(face, hit);
  ColorRGB g;
  double* ch[3] = {&g.r, &g.g, &g.b};
  *ch[face % 3] += kGradientSlope * u;
  *ch[(face + 1) % 3] += kGradientSlope * v;
  return g;
}

ColorRGB procedural_texture(int face, const Vec3& hit,
                            std::uint64_t appearance_seed) {
  const ColorRGB base = texture_base_color(face, appearance_seed);
  const ColorRGB grad = texture_gradient(face, hit);

  // Checker cell size and amplitude vary per (seed, face) so different
  // appearance seeds produce visibly different walls.
  SplitMix64 rng(derive_seed(appearance_seed, static_cast<std::uint64_t>(face),
                             0x636865636bULL));  // "check" stream tag
  const double cell = 0.4 + 0.1 * static_cast<double>(rng.next() % 4);  // 0.4..0.7 m
  const double amp = rng.next_range(0.05, 0.10);
  const auto [u, v] = face_uv(face, hit);
  const long long pu = static_cast<long long>(std::floor(u / cell));
  const long long pv = static_cast<long long>(std::floor(v / cell));
  const double checker = ((pu + pv) & 1LL) ? amp : -amp;

  return {clamp01(base.r + grad.r + checker), clamp01(base.g + grad.g + checker),
          clamp01(base.b + grad.b + checker)};
}

std::uint8_t quantize_channel(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);  // half away from zero, v >= 0
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

ImageRGB render(const SceneSpec& scene, const Pose& pose,
                const CameraIntrinsics& intrinsics, int width, int height) {
  if (!(intrinsics.hfov_deg > 10.0 && intrinsics.hfov_deg < 170.0))
    throw InvalidIntrinsics("hfov out of (10,170)");
  if (width <= 0 || height <= 0) throw InvalidIntrinsics("non-positive size");
  scene.bounds.validate();
  if (!scene.bounds.contains_strict(pose.position)) throw PoseOutsideScene();
  if (std::abs(pose.orientation.norm() - 1.0) > 1e-6) throw NonUnitQuaternion();

  const double tan_half_h = std::tan(0.5 * intrinsics.hfov_deg * kPi / 180.0);
  const double tan_half_v =
      tan_half_h * static_cast<double>(height) / static_cast<double>(width);

  ImageRGB img = ImageRGB::create(width, height);
  const int nthreads = max_threads();
  (void)nthreads;
#if defined(_OPENMP)
#pragma omp parallel for num_threads(nthreads) schedule(static)
#endif
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (2.0 * (x + 0.5) / width - 1.0) * tan_half_h;
      const double v = (1.0 - 2.0 * (y + 0.5) / height) * tan_half_v;
      const Vec3 dir_world = pose.orientation.rotate({u, v, -1.0});
      const FaceHit hit = intersect_room_box(pose.position, dir_world, scene.bounds);
      const ColorRGB c =
          procedural_texture(hit.face, hit.point, scene.appearance_seed);
      std::uint8_t* px = img.at(x, y);
      px[0] = quantize_channel(c.r);
      px[1] = quantize_channel(c.g);
      px[2] = quantize_channel(c.b);
    }
  }
  return img;
}

}  // namespace icps
