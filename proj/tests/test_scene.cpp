#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "icps/image.hpp"
#include "icps/rng.hpp"
#include "icps/scene.hpp"
#include "icps/threads.hpp"
#include "icps/trajectory.hpp"

using namespace icps;

namespace {

const NormalizationBounds kRoom{{0, 0, 0}, {8, 6, 3}};

SceneSpec make_scene(std::uint64_t seed = 101, int id = 0) {
  SceneSpec s;
  s.id = id;
  s.name = "room";
  s.bounds = kRoom;
  s.appearance_seed = seed;
  return s;
}

Pose make_pose(const Vec3& pos, const Vec3& look_dir) {
  return {pos, look_rotation(look_dir)};
}

// Brute-force oracle: test all six planes, keep in-face hits, choose the
// smallest positive t, lowest face id on ties.
FaceHit brute_force_hit(const Vec3& o, const Vec3& d,
                        const NormalizationBounds& b) {
  double best_t = 1e300;
  int best_face = -1;
  Vec3 best_point;
  for (int face = 0; face < 6; ++face) {
    const int axis = face / 2;
    const double plane = (face % 2) ? b.max[axis] : b.min[axis];
    if (d[axis] == 0.0) continue;
    const double t = (plane - o[axis]) / d[axis];
    if (t <= 0.0) continue;
    Vec3 hit = o + d * t;
    hit[axis] = plane;
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      if (hit[a] < b.min[a] - 1e-9 || hit[a] > b.max[a] + 1e-9) inside = false;
    }
    if (!inside) continue;
    if (t < best_t - 1e-15) {
      best_t = t;
      best_face = face;
      best_point = hit;
    }
  }
  return {best_face, best_point};
}

Vec3 random_dir(SplitMix64& rng) {
  for (;;) {
    Vec3 d{rng.next_range(-1, 1), rng.next_range(-1, 1), rng.next_range(-1, 1)};
    if (d.norm() > 1e-3) return d;
  }
}

}  // namespace

TEST_CASE("box intersection axis and diagonal cases") {
  const Vec3 center{4, 3, 1.5};
  auto hit = intersect_room_box(center, {1, 0, 0}, kRoom);
  CHECK(hit.face == 1);
  CHECK(hit.point.x == 8.0);
  CHECK(hit.point.y == doctest::Approx(3.0));
  CHECK(hit.point.z == doctest::Approx(1.5));

  // exact diagonal in a cubic box resolves to the lowest adjacent face id
  const NormalizationBounds cube{{0, 0, 0}, {2, 2, 2}};
  hit = intersect_room_box({1, 1, 1}, {1, 1, 1}, cube);
  CHECK(hit.face == 1);

  CHECK_THROWS_AS(intersect_room_box(center, {0, 0, 0}, kRoom), ZeroDirection);
  CHECK_THROWS_AS(intersect_room_box({9, 3, 1}, {1, 0, 0}, kRoom),
                  OriginOutsideBox);
}

TEST_CASE("box intersection matches the six-plane oracle on 10k rays") {
  SplitMix64 rng(1234);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 o{rng.next_range(0.01, 7.99), rng.next_range(0.01, 5.99),
                 rng.next_range(0.01, 2.99)};
    const Vec3 d = random_dir(rng);
    const FaceHit got = intersect_room_box(o, d, kRoom);
    const FaceHit expect = brute_force_hit(o, d, kRoom);
    REQUIRE(expect.face >= 0);
    CHECK(got.face == expect.face);
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(got.point[a] - expect.point[a]) < 1e-9);
    // hit point sits on its face plane exactly
    const int axis = got.face / 2;
    const double plane = (got.face % 2) ? kRoom.max[axis] : kRoom.min[axis];
    CHECK(got.point[axis] == plane);
  }
}

TEST_CASE("texture determinism and face separation") {
  const Vec3 hit{2.0, 1.0, 1.5};
  const ColorRGB a = procedural_texture(0, hit, 101);
  const ColorRGB b = procedural_texture(0, hit, 101);
  CHECK(a.r == b.r);
  CHECK(a.g == b.g);
  CHECK(a.b == b.b);

  // all 15 face pairs keep a channel distance of at least 16/255 for the
  // default desk appearance seeds
  for (std::uint64_t seed = 101; seed <= 109; ++seed) {
    for (int f1 = 0; f1 < 6; ++f1) {
      for (int f2 = f1 + 1; f2 < 6; ++f2) {
        const ColorRGB c1 = texture_base_color(f1, seed);
        const ColorRGB c2 = texture_base_color(f2, seed);
        const double dist = std::max({std::abs(c1.r - c2.r),
                                      std::abs(c1.g - c2.g),
                                      std::abs(c1.b - c2.b)});
        CHECK(dist >= 16.0 / 255.0);
      }
    }
  }
}

TEST_CASE("texture gradient has the documented slope") {
  // face 0 spans (y,z); its u axis feeds channel 0 at 0.035 per meter
  const ColorRGB g0 = texture_gradient(0, {0.0, 1.0, 1.0});
  const ColorRGB g1 = texture_gradient(0, {0.0, 1.5, 1.0});
  CHECK(g1.r - g0.r == doctest::Approx(0.035 * 0.5).epsilon(1e-12));
  CHECK(g1.g == g0.g);
}

TEST_CASE("quantization rounds half away from zero") {
  CHECK(quantize_channel(0.0) == 0);
  CHECK(quantize_channel(1.0) == 255);
  CHECK(quantize_channel(127.5 / 255.0) == 128);
  CHECK(quantize_channel(126.4999 / 255.0) == 126);
  CHECK(quantize_channel(-0.5) == 0);
  CHECK(quantize_channel(2.0) == 255);
}

TEST_CASE("render shape, determinism and thread invariance") {
  const SceneSpec scene = make_scene();
  const Pose pose = make_pose({4, 3, 1.5}, {1, 0.2, 0});
  const ImageRGB img = render(scene, pose, {}, 32, 32);
  CHECK(img.pixels.size() == 3072);

  const ImageRGB again = render(scene, pose, {}, 32, 32);
  CHECK(img.pixels == again.pixels);

  set_max_threads(2);
  const ImageRGB threaded = render(scene, pose, {}, 32, 32);
  set_max_threads(1);
  CHECK(img.pixels == threaded.pixels);
}

TEST_CASE("render validates inputs") {
  const SceneSpec scene = make_scene();
  const Pose pose = make_pose({4, 3, 1.5}, {1, 0, 0});
  CHECK_THROWS_AS(render(scene, {{20, 3, 1.5}, pose.orientation}, {}, 8, 8),
                  PoseOutsideScene);
  CHECK_THROWS_AS(render(scene, pose, {5.0}, 8, 8), InvalidIntrinsics);
  CHECK_THROWS_AS(render(scene, {{4, 3, 1.5}, {2, 0, 0, 0}}, {}, 8, 8),
                  NonUnitQuaternion);
}

TEST_CASE("golden image hashes") {
  // Bit-exact renderer output, frozen for three probe poses.
  const char* update = std::getenv("ICPS_UPDATE_GOLDEN");
  const std::string golden_path =
      std::string(ICPS_SOURCE_DIR) + "/tests/golden/render_hashes.txt";
  const SceneSpec scene = make_scene(424242);
  const Pose probes[3] = {
      make_pose({4, 3, 1.5}, {1, 0, 0}),
      make_pose({2, 2, 1.0}, {-0.5, 1, 0.1}),
      make_pose({6, 4, 2.0}, {0, -1, -0.2}),
  };
  std::string actual;
  for (const Pose& p : probes)
    actual += image_hash_hex(render(scene, p, {}, 32, 32)) + "\n";

  if (update && update[0] == '1') {
    std::ofstream out(golden_path);
    out << actual;
    MESSAGE("golden hashes regenerated");
    return;
  }
  std::ifstream in(golden_path);
  REQUIRE_MESSAGE(in.good(), "golden hash file missing; regenerate with "
                             "ICPS_UPDATE_GOLDEN=1");
  std::string expected((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(actual == expected);
}

TEST_CASE("different appearance seeds give visibly different images") {
  SplitMix64 rng(777);
  const SceneSpec a = make_scene(101);
  SceneSpec b = a;
  b.appearance_seed = 109;
  double total = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 pos{rng.next_range(0.5, 7.5), rng.next_range(0.5, 5.5),
                   rng.next_range(0.5, 2.5)};
    const Pose pose = make_pose(pos, random_dir(rng));
    total += mean_abs_diff(render(a, pose, {}, 32, 32),
                           render(b, pose, {}, 32, 32));
  }
  CHECK(total / 100.0 > 10.0);
}

TEST_CASE("images are pose sensitive") {
  SplitMix64 rng(888);
  const SceneSpec scene = make_scene(105);
  const double diag = kRoom.extent().norm();
  double total = 0.0;
  double min_pair = 1e300;
  int pairs = 0;
  while (pairs < 100) {
    const Vec3 p1{rng.next_range(0.5, 7.5), rng.next_range(0.5, 5.5),
                  rng.next_range(0.5, 2.5)};
    const Vec3 p2{rng.next_range(0.5, 7.5), rng.next_range(0.5, 5.5),
                  rng.next_range(0.5, 2.5)};
    if ((p2 - p1).norm() < 0.1 * diag) continue;
    const Vec3 dir = random_dir(rng);
    const double diff = mean_abs_diff(render(scene, make_pose(p1, dir), {}, 32, 32),
                                      render(scene, make_pose(p2, dir), {}, 32, 32));
    total += diff;
    min_pair = std::min(min_pair, diff);
    ++pairs;
  }
  CHECK(total / 100.0 >= 5.0);
  CHECK(min_pair > 0.0);
}

TEST_CASE("scenes separate more across seeds than within one scene") {
  SplitMix64 rng(999);
  const SceneSpec a = make_scene(103);
  SceneSpec b = a;
  b.appearance_seed = 107;
  double inter = 0.0, intra = 0.0;
  for (int i = 0; i < 40; ++i) {
    const Vec3 p1{rng.next_range(1, 7), rng.next_range(1, 5),
                  rng.next_range(0.5, 2.5)};
    const Vec3 offset{rng.next_range(-0.3, 0.3), rng.next_range(-0.3, 0.3),
                      rng.next_range(-0.1, 0.1)};
    const Vec3 dir = random_dir(rng);
    const ImageRGB base = render(a, make_pose(p1, dir), {}, 32, 32);
    intra += mean_abs_diff(base, render(a, make_pose(p1 + offset, dir), {}, 32, 32));
    inter += mean_abs_diff(base, render(b, make_pose(p1 + offset, dir), {}, 32, 32));
  }
  CHECK(inter > intra);
}

TEST_CASE("ppm round trip preserves bytes") {
  SplitMix64 rng(31337);
  ImageRGB img = ImageRGB::create(17, 9);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next() & 0xff);
  const std::string path = "roundtrip_tmp.ppm";
  write_ppm(img, path);
  const ImageRGB back = read_ppm(path);
  CHECK(back.width == 17);
  CHECK(back.height == 9);
  CHECK(back.pixels == img.pixels);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_ppm("no_such_image.ppm"), IoFailure);
  std::ofstream bad("bad_tmp.ppm");
  bad << "P6\n4 4\n255\n12";  // truncated pixel data
  bad.close();
  CHECK_THROWS_AS(read_ppm("bad_tmp.ppm"), IoFailure);
  std::filesystem::remove("bad_tmp.ppm");
}
