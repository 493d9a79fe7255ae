#pragma once

#include <string>
#include <vector>

#include "icps/model.hpp"
#include "icps/pipeline/dataset.hpp"
#include "icps/pipeline/train.hpp"
#include "icps/trajectory.hpp"

namespace icps {

/// The full experiment record. Every run is reproducible from this file
/// plus the root seed; unknown keys are rejected so nothing silently
/// falls back to a default.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir;          // resolved against the working directory
  std::string composition_csv;     // resolved against the config file
  std::vector<SceneSpec> scenes;   // ids assigned by position
  TrajectoryConfig trajectory;     // per-cell counts come from the table
  RenderSettings render;
  SplitSpec split;                 // seed derived from the root seed
  ClassifierConfig classifier;
  RegressorConfig regressor;
  TrainSettings classifier_train;
  TrainSettings regressor_train;
};

RunConfig load_run_config(const std::string& path);

// Seed streams hanging off the root seed, one per pipeline stage.
std::uint64_t seed_for_generation(const RunConfig& cfg);
std::uint64_t seed_for_split(const RunConfig& cfg);
std::uint64_t seed_for_classifier(const RunConfig& cfg);
std::uint64_t seed_for_regressor(const RunConfig& cfg, int scene_id);

}  // namespace icps
