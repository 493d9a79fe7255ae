#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "icps/model.hpp"
#include "icps/pipeline/dataset.hpp"
#include "icps/pipeline/manifest.hpp"

namespace icps {

struct TrainSettings {
  int batch_size = 32;
  int epochs = 30;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int early_stop_patience = 0;  // 0 disables early stopping
  bool augment = false;
  AugmentationPolicy augmentation;
  std::uint64_t seed = 0;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;  // NaN for regressors
  double val_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochRow> rows;
  int best_epoch = -1;
  double best_val_metric = 0.0;  // accuracy (classifier) or loss (regressor)
};

/// `epoch,train_loss,val_loss,train_acc,val_acc` per row; accuracy cells
/// are written as nan for regressors.
void write_curves_csv(const TrainReport& report, const std::string& path);

/// Loads and caches the dataset's PPM files, keyed by manifest-relative
/// path.
class ImageStore {
 public:
  explicit ImageStore(std::string root) : root_(std::move(root)) {}
  const ImageRGB& get(const std::string& rel_path);

 private:
  std::string root_;
  std::map<std::string, ImageRGB> cache_;
};

/// Minibatch Adam on softmax cross-entropy over all scenes, with
/// augmentation on training batches when enabled. Retains the epoch with
/// the best validation accuracy.
TrainReport train_classifier_model(CnnModel& model, const DatasetManifest& m,
                                   ImageStore& images,
                                   const TrainSettings& cfg);

/// Minibatch Adam on the pose loss (plus activity penalty) for one
/// scene's samples, on normalized positions and canonical unit
/// quaternions. Retains the epoch with the best validation loss.
TrainReport train_regressor_model(CnnModel& model, const DatasetManifest& m,
                                  ImageStore& images, int scene_id,
                                  const TrainSettings& cfg);

}  // namespace icps
