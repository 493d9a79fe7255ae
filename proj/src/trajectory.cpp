#include "icps/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "icps/rng.hpp"

namespace icps {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;

double clampd(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

void validate_inputs(const NormalizationBounds& bounds,
                     const TrajectoryConfig& cfg) {
  bounds.validate();
  if (cfg.sample_count < 4)
    throw InvalidConfig("sample_count must be >= 4");
  if (cfg.wall_margin < 0.0) throw InvalidConfig("wall_margin must be >= 0");
  if (!(cfg.camera_height_fraction > 0.0 && cfg.camera_height_fraction < 1.0))
    throw InvalidConfig("camera_height_fraction must be in (0,1)");
  const Vec3 e = bounds.extent();
  const double smallest = std::min({e.x, e.y, e.z});
  if (!(cfg.wall_margin < 0.5 * smallest))
    throw InvalidConfig("wall_margin must be < half the smallest extent");
}

// Uniform arc-length sampling of a closed polyline. Sample i sits at
// distance i*L/n from the start, so the endpoint never duplicates the
// start corner.
struct Polyline {
  std::vector<Vec3> corners;  // closed: last connects back to first

  void sample(int n, std::vector<Vec3>& pos, std::vector<Vec3>& tan) const {
    const std::size_t m = corners.size();
    std::vector<double> seg_len(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      seg_len[i] = (corners[(i + 1) % m] - corners[i]).norm();
      total += seg_len[i];
    }
    for (int k = 0; k < n; ++k) {
      double s = total * static_cast<double>(k) / static_cast<double>(n);
      std::size_t i = 0;
      while (i + 1 < m && s > seg_len[i]) {
        s -= seg_len[i];
        ++i;
      }
      const Vec3 a = corners[i];
      const Vec3 b = corners[(i + 1) % m];
      const Vec3 d = b - a;
      const double len = seg_len[i];
      pos.push_back(a + d * (len > 0.0 ? s / len : 0.0));
      tan.push_back(d);
    }
  }
};

Vec3 horizontal_center(const NormalizationBounds& b) {
  return {(b.min.x + b.max.x) * 0.5, (b.min.y + b.max.y) * 0.5, 0.0};
}

}  // namespace

const char* trajectory_style_name(TrajectoryStyle s) {
  static const char* names[kNumTrajectoryStyles] = {
      "seq1", "seq2", "seq3", "seq4", "seq5", "seq6", "seq7", "seq8", "seq9"};
  return names[static_cast<int>(s)];
}

QuaternionWPQR look_rotation(const Vec3& forward_world) {
  const double n = forward_world.norm();
  if (n <= 1e-12) throw ZeroTangent();
  const Vec3 f = forward_world * (1.0 / n);
  Vec3 up{0.0, 0.0, 1.0};
  if (std::abs(f.z) > 0.999999) up = {0.0, 1.0, 0.0};  // looking along +-z
  const Vec3 back = f * -1.0;
  Vec3 right = f.cross(up);
  right = right * (1.0 / right.norm());
  const Vec3 cam_up = back.cross(right);
  return quat_from_columns(right, cam_up, back);
}

QuaternionWPQR style_orientation(TrajectoryStyle style, const Vec3& position,
                                 const Vec3& path_tangent,
                                 const NormalizationBounds& bounds) {
  switch (style) {
    case TrajectoryStyle::Seq1RectForward:
    case TrajectoryStyle::Seq3TrapForward:
    case TrajectoryStyle::Seq5StraightRotate:
    case TrajectoryStyle::Seq9Random:
      return look_rotation(path_tangent);
    case TrajectoryStyle::Seq2RectBackward:
    case TrajectoryStyle::Seq4TrapBackward:
      return look_rotation(path_tangent * -1.0);
    case TrajectoryStyle::Seq6CentralCircleRotate:
    case TrajectoryStyle::Seq7ZSpiral: {
      Vec3 radial = position - horizontal_center(bounds);
      radial.z = 0.0;
      if (radial.norm() <= 1e-12) throw ZeroTangent("degenerate radial");
      return look_rotation(radial);
    }
    case TrajectoryStyle::Seq8ZSemicircular: {
      Vec3 dir = bounds.center() - position;
      if (dir.norm() <= 1e-12) dir = {1.0, 0.0, 0.0};  // at center: face +x
      return look_rotation(dir);
    }
  }
  throw InvalidConfig("unknown trajectory style");
}

std::vector<Pose> sample_trajectory(TrajectoryStyle style,
                                    const NormalizationBounds& bounds,
                                    const TrajectoryConfig& cfg) {
  validate_inputs(bounds, cfg);
  const int n = cfg.sample_count;
  const double m = cfg.wall_margin;
  const Vec3 ext = bounds.extent();
  const double x0 = bounds.min.x + m, x1 = bounds.max.x - m;
  const double y0 = bounds.min.y + m, y1 = bounds.max.y - m;
  const double zlo = bounds.min.z + m, zhi = bounds.max.z - m;
  const double cam_z =
      clampd(bounds.min.z + cfg.camera_height_fraction * ext.z, zlo, zhi);
  const Vec3 hc = horizontal_center(bounds);

  std::vector<Vec3> pos, tan;
  pos.reserve(n);
  tan.reserve(n);

  switch (style) {
    case TrajectoryStyle::Seq1RectForward:
    case TrajectoryStyle::Seq2RectBackward: {
      Polyline p{{{x0, y0, cam_z}, {x1, y0, cam_z}, {x1, y1, cam_z}, {x0, y1, cam_z}}};
      p.sample(n, pos, tan);
      break;
    }
    case TrajectoryStyle::Seq3TrapForward:
    case TrajectoryStyle::Seq4TrapBackward: {
      // Far edge shrunk to half width: isosceles trapezoid.
      const double q = (x1 - x0) * 0.25;
      Polyline p{{{x0, y0, cam_z},
                  {x1, y0, cam_z},
                  {hc.x + q, y1, cam_z},
                  {hc.x - q, y1, cam_z}}};
      p.sample(n, pos, tan);
      break;
    }
    case TrajectoryStyle::Seq5StraightRotate: {
      // Mid-line of the longer horizontal axis; yaw sweeps one full turn.
      const bool along_x = ext.x >= ext.y;
      const Vec3 a = along_x ? Vec3{x0, hc.y, cam_z} : Vec3{hc.x, y0, cam_z};
      const Vec3 b = along_x ? Vec3{x1, hc.y, cam_z} : Vec3{hc.x, y1, cam_z};
      for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        pos.push_back(a + (b - a) * t);
        const double yaw = 2.0 * kPi * static_cast<double>(i) / n;
        tan.push_back({std::cos(yaw), std::sin(yaw), 0.0});
      }
      break;
    }
    case TrajectoryStyle::Seq6CentralCircleRotate:
    case TrajectoryStyle::Seq7ZSpiral: {
      const double horiz = std::min(ext.x, ext.y);
      // Nominal radius is a quarter of the smaller horizontal extent,
      // reduced if the wall margin leaves less room than that.
      const double radius = std::min(0.25 * horiz, 0.5 * horiz - m);
      if (!(radius > 0.0)) throw InvalidConfig("margin leaves no room for circle");
      const bool spiral = style == TrajectoryStyle::Seq7ZSpiral;
      for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * static_cast<double>(i) / n;
        const double z =
            spiral ? zlo + (zhi - zlo) * static_cast<double>(i) / (n - 1)
                   : cam_z;
        pos.push_back({hc.x + radius * std::cos(a),
                       hc.y + radius * std::sin(a), z});
        tan.push_back({std::cos(a), std::sin(a), 0.0});
      }
      break;
    }
    case TrajectoryStyle::Seq8ZSemicircular: {
      // Half circle in the x-z plane on the y mid-line. Sampled at cell
      // midpoints so the arc stays strictly off the walls and floor.
      const double radius = std::min(0.5 * (ext.x - 2.0 * m), ext.z - 2.0 * m);
      if (!(radius > 0.0))
        throw InvalidConfig("margin leaves no room for semicircle");
      for (int i = 0; i < n; ++i) {
        const double a = kPi * (static_cast<double>(i) + 0.5) / n;
        pos.push_back({hc.x + radius * std::cos(a), hc.y,
                       zlo + radius * std::sin(a)});
        tan.push_back({0.0, 0.0, 0.0});  // unused: faces the room center
      }
      break;
    }
    case TrajectoryStyle::Seq9Random: {
      SplitMix64 rng(cfg.seed);
      for (int i = 0; i < n; ++i) {
        const double ux = rng.next_unit();
        const double uy = rng.next_unit();
        const double uz = rng.next_unit();
        pos.push_back({x0 + ux * (x1 - x0), y0 + uy * (y1 - y0),
                       zlo + uz * (zhi - zlo)});
        const double yaw = rng.next_range(0.0, 360.0) * kDegToRad;
        const double pitch = rng.next_range(-20.0, 20.0) * kDegToRad;
        tan.push_back({std::cos(pitch) * std::cos(yaw),
                       std::cos(pitch) * std::sin(yaw), std::sin(pitch)});
      }
      break;
    }
  }

  std::vector<Pose> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back({pos[i], style_orientation(style, pos[i], tan[i], bounds)});
  return out;
}

void CompositionTable::set(const std::string& scene, TrajectoryStyle style,
                           long count) {
  if (count < 0) throw InvalidConfig("negative sample count");
  auto it = rows_.find(scene);
  if (it == rows_.end()) {
    order_.push_back(scene);
    it = rows_.emplace(scene, std::array<long, kNumTrajectoryStyles>{}).first;
  }
  it->second[static_cast<int>(style)] = count;
}

long CompositionTable::get(const std::string& scene,
                           TrajectoryStyle style) const {
  auto it = rows_.find(scene);
  return it == rows_.end() ? 0 : it->second[static_cast<int>(style)];
}

long CompositionTable::scene_total(const std::string& scene) const {
  auto it = rows_.find(scene);
  if (it == rows_.end()) return 0;
  long t = 0;
  for (long c : it->second) t += c;
  return t;
}

long CompositionTable::style_total(TrajectoryStyle style) const {
  long t = 0;
  for (const auto& [name, row] : rows_) t += row[static_cast<int>(style)];
  return t;
}

long CompositionTable::grand_total() const {
  long t = 0;
  for (const auto& [name, row] : rows_)
    for (long c : row) t += c;
  return t;
}

std::vector<std::string> CompositionTable::scene_names() const {
  return order_;
}

CompositionTable CompositionTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open composition CSV: " + path);
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto split = [&](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    return cells;
  };

  std::string line;
  if (!std::getline(in, line))
    throw InvalidConfig("composition CSV is empty: " + path);
  const auto header = split(line);
  if (header.size() != 1 + kNumTrajectoryStyles || header[0] != "scene")
    throw InvalidConfig("composition CSV header must be scene,seq1,...,seq9");
  for (int s = 0; s < kNumTrajectoryStyles; ++s)
    if (header[1 + s] != trajectory_style_name(static_cast<TrajectoryStyle>(s)))
      throw InvalidConfig("composition CSV header must be scene,seq1,...,seq9");

  CompositionTable table;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 1 + kNumTrajectoryStyles)
      throw InvalidConfig("composition CSV row has wrong column count");
    if (table.rows_.count(cells[0]))
      throw InvalidConfig("duplicate scene in composition CSV: " + cells[0]);
    for (int s = 0; s < kNumTrajectoryStyles; ++s) {
      std::size_t used = 0;
      long count = 0;
      try {
        count = std::stol(cells[1 + s], &used);
      } catch (const std::exception&) {
        throw InvalidConfig("bad count in composition CSV: " + cells[1 + s]);
      }
      if (used != cells[1 + s].size())
        throw InvalidConfig("bad count in composition CSV: " + cells[1 + s]);
      table.set(cells[0], static_cast<TrajectoryStyle>(s), count);
    }
  }
  if (table.order_.empty())
    throw InvalidConfig("composition CSV has no scene rows");
  return table;
}

std::vector<TrajectoryCell> expand_composition(
    const std::vector<SceneSpec>& scenes, const CompositionTable& table,
    const TrajectoryConfig& cfg) {
  std::vector<TrajectoryCell> cells;
  for (const std::string& name : table.scene_names()) {
    const SceneSpec* scene = nullptr;
    for (const SceneSpec& s : scenes)
      if (s.name == name) scene = &s;
    if (!scene) throw UnknownScene("composition references unknown scene: " + name);
    for (int s = 0; s < kNumTrajectoryStyles; ++s) {
      const auto style = static_cast<TrajectoryStyle>(s);
      const long count = table.get(name, style);
      TrajectoryCell cell;
      cell.scene_id = scene->id;
      cell.style = style;
      if (count > 0) {
        TrajectoryConfig cell_cfg = cfg;
        cell_cfg.sample_count = static_cast<int>(count);
        cell_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(scene->id),
                                    static_cast<std::uint64_t>(s));
        cell.poses = sample_trajectory(style, scene->bounds, cell_cfg);
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace icps
