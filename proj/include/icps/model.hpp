#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "icps/nn/ops.hpp"
#include "icps/nn/tensor.hpp"

namespace icps {

enum class ModelKind : std::uint8_t { Classifier = 1, Regressor = 2 };

struct ClassifierConfig {
  int input_h = 32;
  int input_w = 32;
  int num_classes = 9;
  std::vector<int> conv_filters{16, 32, 64};
  std::vector<int> dense_widths{128, 64};
  double dropout_rate = 0.10;
  bool batchnorm = true;

  void validate() const;
};

// Output head is fixed at 7: [x, y, z, w, p, q, r], raw (no activation).
inline constexpr int kRegressorOutputs = 7;

struct RegressorConfig {
  int input_h = 32;
  int input_w = 32;
  std::vector<int> conv_filters{12, 24, 48};
  std::vector<int> dense_widths{96, 48};
  double dropout_rate = 0.05;
  double dropconnect_rate = 0.02;
  double activity_lambda = 0.0;
  double beta = 1.0;
  bool batchnorm = true;

  void validate() const;
};

/// Shared backbone for both network kinds: conv stages of
/// conv(3x3, same) -> batch-norm -> ReLU -> 2x2 max pool, then global
/// average pooling and a dense head. Classifier hidden layers end in
/// swish, regressor hidden layers in ReLU with drop-connect on their
/// weights. Dropout and batch-norm sit between dense layers.
class CnnModel {
 public:
  struct ConvStage {
    nn::TensorPtr kernel, bias, gamma, beta;
    nn::BatchNormStats stats;
  };
  struct DenseBlock {
    nn::TensorPtr weight, bias, gamma, beta;
    nn::BatchNormStats stats;
  };
  struct ForwardResult {
    nn::TensorPtr out;
    std::vector<nn::TensorPtr> hidden_activations;  // activity-penalty targets
  };

  ModelKind kind = ModelKind::Classifier;
  int input_h = 0, input_w = 0, outputs = 0;
  std::vector<int> conv_filters, dense_widths;
  double dropout_rate = 0.0, dropconnect_rate = 0.0;
  double activity_lambda = 0.0, beta = 1.0;
  bool use_batchnorm = true;

  std::vector<ConvStage> conv;
  std::vector<DenseBlock> hidden;
  nn::TensorPtr head_w, head_b;

  /// x must be [n, input_h, input_w, 3]. `mask_seed` drives the dropout
  /// and drop-connect masks in train mode; infer mode ignores it.
  ForwardResult forward(const nn::TensorPtr& x, nn::Mode mode,
                        std::uint64_t mask_seed);

  std::vector<nn::TensorPtr> trainable_params() const;
  std::vector<std::pair<std::string, nn::TensorPtr>> named_params() const;
  std::int64_t parameter_count() const;

  /// Flat copy of every trainable value plus batch-norm running stats,
  /// for best-epoch snapshots.
  std::vector<double> snapshot_state() const;
  void restore_state(const std::vector<double>& blob);

  void zero_grads();
};

CnnModel build_classifier(const ClassifierConfig& cfg, std::uint64_t seed);
CnnModel build_regressor(const RegressorConfig& cfg, std::uint64_t seed);

}  // namespace icps
