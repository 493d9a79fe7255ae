#include "icps/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "icps/rng.hpp"

namespace icps {

namespace fs = std::filesystem;

void SplitSpec::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0))
    throw InvalidConfig("split fractions must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9)
    throw InvalidConfig("split fractions must sum to 1");
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

DatasetManifest build_dataset(const std::vector<SceneSpec>& scenes,
                              const CompositionTable& table,
                              const TrajectoryConfig& traj_cfg,
                              const RenderSettings& render_cfg,
                              const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw IoFailure("cannot create output directory: " + out_dir);

  DatasetManifest m;
  m.image_width = render_cfg.width;
  m.image_height = render_cfg.height;
  m.hfov_deg = render_cfg.intrinsics.hfov_deg;
  for (const SceneSpec& s : scenes) m.scenes.push_back({s, std::nullopt});

  const auto cells = expand_composition(scenes, table, traj_cfg);
  for (const auto& cell : cells) {
    if (cell.poses.empty()) continue;
    const SceneSpec* scene = nullptr;
    for (const SceneSpec& s : scenes)
      if (s.id == cell.scene_id) scene = &s;
    const std::string scene_dir = sanitize_name(scene->name);
    fs::create_directories(fs::path(out_dir) / "images" / scene_dir, ec);
    if (ec) throw IoFailure("cannot create scene directory: " + scene_dir);
    for (std::size_t i = 0; i < cell.poses.size(); ++i) {
      char file[64];
      std::snprintf(file, sizeof(file), "%s_%04zu.ppm",
                    trajectory_style_name(cell.style), i);
      const std::string rel = "images/" + scene_dir + "/" + file;
      const ImageRGB img = render(*scene, cell.poses[i], render_cfg.intrinsics,
                                  render_cfg.width, render_cfg.height);
      write_ppm(img, (fs::path(out_dir) / rel).string());
      ManifestSample sample;
      sample.scene_id = cell.scene_id;
      sample.style_index = static_cast<int>(cell.style);
      sample.index = static_cast<int>(i);
      sample.image = rel;
      sample.pose = cell.poses[i];
      m.samples.push_back(std::move(sample));
    }
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  return m;
}

void split_dataset(DatasetManifest& m, const SplitSpec& spec) {
  spec.validate();
  std::map<int, std::vector<std::size_t>> by_scene;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    by_scene[m.samples[i].scene_id].push_back(i);

  for (auto& [scene_id, idx] : by_scene) {
    if (idx.size() < 5)
      throw SceneTooSmall("scene " + std::to_string(scene_id) +
                          " has fewer than 5 samples");
    SplitMix64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(scene_id)));
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
      std::swap(idx[i], idx[j]);
    }
    const std::size_t n = idx.size();
    const auto n_train = static_cast<std::size_t>(
        std::floor(spec.train * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(
        std::floor(spec.val * static_cast<double>(n)));
    for (std::size_t k = 0; k < n; ++k) {
      ManifestSample& s = m.samples[idx[k]];
      s.split = k < n_train ? "train" : (k < n_train + n_val ? "val" : "test");
    }
  }
}

ImageRGB augment(const ImageRGB& img, const AugmentationPolicy& policy,
                 std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::size_t count = img.pixels.size();
  std::vector<double> acc(count);
  for (std::size_t i = 0; i < count; ++i)
    acc[i] = static_cast<double>(img.pixels[i]);

  if (policy.enable_noise && policy.noise_sigma > 0.0) {
    for (std::size_t i = 0; i < count; ++i)
      acc[i] += policy.noise_sigma * rng.next_gaussian();
  }
  if (policy.enable_brightness) {
    const double delta =
        rng.next_range(policy.brightness_min, policy.brightness_max);
    for (std::size_t i = 0; i < count; ++i) acc[i] += delta;
  }
  if (policy.enable_channel_shift) {
    double delta[3];
    for (double& d : delta)
      d = rng.next_range(policy.channel_shift_min, policy.channel_shift_max);
    for (std::size_t i = 0; i < count; ++i) acc[i] += delta[i % 3];
  }

  ImageRGB out = ImageRGB::create(img.width, img.height);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = std::min(255.0, std::max(0.0, acc[i]));
    out.pixels[i] = static_cast<std::uint8_t>(std::floor(v + 0.5));
  }
  return out;
}

void compute_class_bounds(DatasetManifest& m) {
  for (auto& scene : m.scenes) {
    std::vector<Vec3> train_positions;
    for (const auto& s : m.samples)
      if (s.scene_id == scene.spec.id && s.split == "train")
        train_positions.push_back(s.pose.position);
    if (train_positions.empty())
      throw EmptyInput("scene " + scene.spec.name + " has no training samples");
    scene.norm_bounds = compute_bounds(train_positions);
  }
  for (auto& s : m.samples) {
    const auto& scene = m.scene_by_id(s.scene_id);
    s.norm_pos = normalize_position(s.pose.position, *scene.norm_bounds);
  }
}

}  // namespace icps
