#include "icps/pipeline/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "icps/errors.hpp"

namespace icps {

using ordered_json = nlohmann::ordered_json;

const ManifestScene& DatasetManifest::scene_by_id(int id) const {
  for (const auto& s : scenes)
    if (s.spec.id == id) return s;
  throw UnknownScene("no scene with id " + std::to_string(id));
}

bool DatasetManifest::has_split() const {
  for (const auto& s : samples)
    if (s.split.empty()) return false;
  return !samples.empty();
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  ordered_json j;
  j["image_width"] = m.image_width;
  j["image_height"] = m.image_height;
  j["hfov_deg"] = m.hfov_deg;
  j["scenes"] = ordered_json::array();
  for (const auto& s : m.scenes) {
    ordered_json js;
    js["id"] = s.spec.id;
    js["name"] = s.spec.name;
    js["room_min"] = {s.spec.bounds.min.x, s.spec.bounds.min.y,
                      s.spec.bounds.min.z};
    js["room_max"] = {s.spec.bounds.max.x, s.spec.bounds.max.y,
                      s.spec.bounds.max.z};
    js["appearance_seed"] = s.spec.appearance_seed;
    if (s.norm_bounds) {
      js["norm_min"] = {s.norm_bounds->min.x, s.norm_bounds->min.y,
                        s.norm_bounds->min.z};
      js["norm_max"] = {s.norm_bounds->max.x, s.norm_bounds->max.y,
                        s.norm_bounds->max.z};
    }
    j["scenes"].push_back(std::move(js));
  }
  j["samples"] = ordered_json::array();
  for (const auto& s : m.samples) {
    ordered_json js;
    js["scene_id"] = s.scene_id;
    js["style"] = s.style_index;
    js["index"] = s.index;
    js["image"] = s.image;
    js["pose"] = {s.pose.position.x,    s.pose.position.y,
                  s.pose.position.z,    s.pose.orientation.w,
                  s.pose.orientation.p, s.pose.orientation.q,
                  s.pose.orientation.r};
    if (s.norm_pos)
      js["norm_pos"] = {s.norm_pos->x, s.norm_pos->y, s.norm_pos->z};
    js["split"] = s.split;
    j["samples"].push_back(std::move(js));
  }
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write manifest: " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoFailure("short write: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure("manifest is not valid JSON: " + path);
  }
  DatasetManifest m;
  try {
    m.image_width = j.at("image_width");
    m.image_height = j.at("image_height");
    m.hfov_deg = j.at("hfov_deg");
    for (const auto& js : j.at("scenes")) {
      ManifestScene s;
      s.spec.id = js.at("id");
      s.spec.name = js.at("name");
      s.spec.bounds.min = {js.at("room_min")[0], js.at("room_min")[1],
                           js.at("room_min")[2]};
      s.spec.bounds.max = {js.at("room_max")[0], js.at("room_max")[1],
                           js.at("room_max")[2]};
      s.spec.appearance_seed = js.at("appearance_seed");
      if (js.contains("norm_min")) {
        NormalizationBounds b;
        b.min = {js["norm_min"][0], js["norm_min"][1], js["norm_min"][2]};
        b.max = {js["norm_max"][0], js["norm_max"][1], js["norm_max"][2]};
        s.norm_bounds = b;
      }
      m.scenes.push_back(std::move(s));
    }
    for (const auto& js : j.at("samples")) {
      ManifestSample s;
      s.scene_id = js.at("scene_id");
      s.style_index = js.at("style");
      s.index = js.at("index");
      s.image = js.at("image");
      const auto& p = js.at("pose");
      s.pose.position = {p[0], p[1], p[2]};
      s.pose.orientation = {p[3], p[4], p[5], p[6]};
      if (js.contains("norm_pos"))
        s.norm_pos = Vec3{js["norm_pos"][0], js["norm_pos"][1], js["norm_pos"][2]};
      s.split = js.at("split");
      m.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure("manifest has missing or malformed fields: " + path);
  }
  return m;
}

}  // namespace icps
