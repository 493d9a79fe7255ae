#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "icps/geometry.hpp"

namespace icps {

/// The nine camera movement styles, in their fixed published order.
enum class TrajectoryStyle : int {
  Seq1RectForward = 0,
  Seq2RectBackward = 1,
  Seq3TrapForward = 2,
  Seq4TrapBackward = 3,
  Seq5StraightRotate = 4,
  Seq6CentralCircleRotate = 5,
  Seq7ZSpiral = 6,
  Seq8ZSemicircular = 7,
  Seq9Random = 8,
};

inline constexpr int kNumTrajectoryStyles = 9;

const char* trajectory_style_name(TrajectoryStyle s);  // "seq1".."seq9"

struct TrajectoryConfig {
  int sample_count = 0;
  double wall_margin = 0.0;            // meters, keeps the camera off walls
  double camera_height_fraction = 0.4; // in (0,1), fraction of z extent
  std::uint64_t seed = 0;
};

struct SceneSpec {
  int id = 0;
  std::string name;
  NormalizationBounds bounds;  // the room box, meters
  std::uint64_t appearance_seed = 0;
};

/// Map (scene name, style) -> sample count. Totals are always derived.
class CompositionTable {
 public:
  void set(const std::string& scene, TrajectoryStyle style, long count);
  long get(const std::string& scene, TrajectoryStyle style) const;  // 0 if absent
  long scene_total(const std::string& scene) const;
  long style_total(TrajectoryStyle style) const;
  long grand_total() const;
  std::vector<std::string> scene_names() const;  // insertion order

  /// CSV with header row `scene,seq1,...,seq9`.
  static CompositionTable load_csv(const std::string& path);

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::array<long, kNumTrajectoryStyles>> rows_;
};

/// Camera rotation whose forward axis (-Z camera) points along
/// `forward_world`; world up (0,0,1) resolves the roll, with a fixed
/// +Y fallback when looking straight up or down.
QuaternionWPQR look_rotation(const Vec3& forward_world);

/// Facing rule for one style at one path point. `path_tangent` is the
/// direction of travel for the perimeter styles and the precomputed view
/// direction for Seq5/Seq9.
QuaternionWPQR style_orientation(TrajectoryStyle style, const Vec3& position,
                                 const Vec3& path_tangent,
                                 const NormalizationBounds& bounds);

/// Deterministic pose sequence for one style inside a room. Identical
/// inputs give bitwise-identical output.
std::vector<Pose> sample_trajectory(TrajectoryStyle style,
                                    const NormalizationBounds& bounds,
                                    const TrajectoryConfig& cfg);

struct TrajectoryCell {
  int scene_id = 0;
  TrajectoryStyle style = TrajectoryStyle::Seq1RectForward;
  std::vector<Pose> poses;
};

/// One pose list per (scene, style) table cell. Per-cell seeds are
/// derive_seed(cfg.seed, scene index, style index), so cells can be
/// generated in any order or in parallel with identical results.
std::vector<TrajectoryCell> expand_composition(
    const std::vector<SceneSpec>& scenes, const CompositionTable& table,
    const TrajectoryConfig& cfg);

}  // namespace icps
