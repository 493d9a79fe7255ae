#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "icps/model.hpp"
#include "icps/pipeline/train.hpp"

namespace icps {

struct RegressorEntry {
  CnnModel model;
  NormalizationBounds bounds;  // the scene's training-split bounds
};

class RegressorRegistry {
 public:
  void add(int scene_id, CnnModel model, NormalizationBounds bounds) {
    entries_.emplace(scene_id, RegressorEntry{std::move(model), bounds});
  }
  bool has(int scene_id) const { return entries_.count(scene_id) != 0; }
  RegressorEntry& get(int scene_id) {
    auto it = entries_.find(scene_id);
    if (it == entries_.end())
      throw MissingRegressor("no regressor for scene " +
                             std::to_string(scene_id));
    return it->second;
  }
  const std::map<int, RegressorEntry>& entries() const { return entries_; }

 private:
  std::map<int, RegressorEntry> entries_;
};

/// Argmax with ties broken toward the lowest index, so the routing is
/// invariant under any strictly increasing transform of the scores.
int argmax_route(const std::vector<double>& scores);

struct TandemResult {
  int scene_id = 0;
  Pose pose;  // meters; orientation unit and canonical
  std::vector<double> probabilities;
};

/// The tandem test flow: classify, route to that scene's regressor,
/// denormalize the position with the scene's bounds and normalize +
/// canonicalize the quaternion. A raw quaternion too close to zero falls
/// back to identity.
TandemResult tandem_infer(const ImageRGB& image, CnnModel& classifier,
                          RegressorRegistry& registry);

struct SceneEval {
  int scene_id = 0;
  long routed = 0;  // correctly routed test samples
  std::array<double, 3> pos_mae_m{};
  std::array<double, 3> pos_mae_norm{};
  double quat_mae_deg = 0.0;
};

/// One test sample's predictions, aligned with the manifest's test
/// samples in manifest order. `has_pose` is false when the predicted
/// scene had no registered regressor.
struct SamplePrediction {
  int predicted_class = 0;
  bool has_pose = false;
  Pose pose_m;
  Vec3 pos_norm;
};

struct EvalReport {
  std::vector<std::string> scene_names;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
  long total = 0;
  double accuracy = 0.0;
  long misroute_count = 0;
  // Aggregates over correctly routed samples:
  std::array<double, 3> pos_mae_m{};
  std::array<double, 3> pos_mae_norm{};
  double quat_mae_deg = 0.0;
  // Aggregate over every sample whose predicted scene had a regressor,
  // misrouted ones included:
  std::array<double, 3> routed_pos_mae_m{};
  long routed_total = 0;
  std::vector<SceneEval> per_scene;
};

/// Metric bookkeeping over the test split, given per-sample predictions.
/// Separated from the model plumbing so perfect-stub predictions can
/// exercise the confusion-matrix and error accounting directly.
EvalReport summarize_predictions(const DatasetManifest& m,
                                 const std::vector<SamplePrediction>& preds);

EvalReport evaluate_tandem(const DatasetManifest& m, ImageStore& images,
                           CnnModel& classifier, RegressorRegistry& registry);

void write_eval_report_json(const EvalReport& r, const std::string& path);

}  // namespace icps
