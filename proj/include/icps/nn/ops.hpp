#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icps/nn/tensor.hpp"

namespace icps::nn {

enum class Mode { Train, Infer };
enum class Padding { Valid, Same };
enum class MaskKind { Dropout, DropConnect };

/// Running batch-norm statistics, owned by the layer (not tape nodes).
/// Start at mean 0 / var 1 and move by exponential average in train mode:
/// running = momentum*running + (1-momentum)*batch.
struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;
  void reset(std::int64_t features) {
    mean.assign(static_cast<std::size_t>(features), 0.0);
    var.assign(static_cast<std::size_t>(features), 1.0);
  }
};

// Test hook for the gradcheck CLI: names an op whose weight gradient is
// deliberately doubled. Empty string disables it.
void set_sabotage(const std::string& op);
const std::string& sabotage();

/// y = x W + b for x [n,in], W [in,out], b [out].
TensorPtr dense(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

/// Strided cross-correlation, NHWC input [n,h,w,c], kernel [kh,kw,c,f]
/// (odd kh/kw), bias [f]. Same-padding output is ceil(size/stride) with
/// the shortfall split top/left-heavy toward the bottom/right.
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& k, const TensorPtr& b,
                 std::int64_t stride, Padding padding);

/// Normalizes over all axes except the last. Train mode uses batch
/// statistics (biased variance) and updates `stats`; infer mode reads
/// `stats`. Backward is exact through the batch statistics.
TensorPtr batchnorm(const TensorPtr& x, const TensorPtr& gamma,
                    const TensorPtr& beta, BatchNormStats& stats, Mode mode,
                    double momentum = 0.9, double eps = 1e-5);

/// Train mode zeroes elements independently with probability `rate` and
/// scales survivors by 1/(1-rate); infer mode and rate 0 are exactly the
/// identity. Pass the activations for Dropout, the weight tensor for
/// DropConnect. The mask is a pure function of (seed, kind).
TensorPtr dropout_mask(const TensorPtr& x, double rate, MaskKind kind,
                       Mode mode, std::uint64_t seed);

TensorPtr relu(const TensorPtr& x);
TensorPtr swish(const TensorPtr& x);  // x * sigmoid(x)

/// 2x2 max pooling, stride 2, first-occurrence tie-break.
TensorPtr maxpool2x2(const TensorPtr& x);

/// [n,h,w,c] -> [n,c] spatial mean.
TensorPtr global_avg_pool(const TensorPtr& x);

/// Mean categorical cross-entropy over the batch with a numerically
/// stable softmax fused in; labels must be exactly one-hot rows.
TensorPtr softmax_cross_entropy(const TensorPtr& logits,
                                const TensorPtr& onehot);

/// Softmax probabilities of logit rows, no tape (inference path).
std::vector<double> softmax_values(const Tensor& logits);

/// Mean over the batch of |P - Phat|_2 + beta * |Qhat - Q/|Q||_2.
/// The ground-truth quaternion is normalized inside the loss; the
/// prediction is compared raw. Gradients flow to the predictions only.
TensorPtr pose_loss(const TensorPtr& pos_pred, const TensorPtr& quat_pred,
                    const TensorPtr& pos_true, const TensorPtr& quat_true,
                    double beta);

/// lambda * mean of squared activations, pooled over every element of
/// every listed tensor.
TensorPtr activity_penalty(const std::vector<TensorPtr>& activations,
                           double lambda);

/// Elementwise sum of two same-shape tensors (used to combine losses).
TensorPtr add(const TensorPtr& a, const TensorPtr& b);

/// Column slice of a [n,m] tensor: columns [start, start+count).
TensorPtr slice_cols(const TensorPtr& x, std::int64_t start,
                     std::int64_t count);

/// Elementwise product of two same-shape tensors.
TensorPtr mul_elem(const TensorPtr& a, const TensorPtr& b);

/// Sum of all elements as a scalar [1] tensor.
TensorPtr sum_all(const TensorPtr& x);

}  // namespace icps::nn
