#pragma once

#include <cstdint>
#include <vector>

#include "icps/nn/tensor.hpp"

namespace icps::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are held per parameter tensor in
/// the order passed to init(); step() reads each tensor's grad slot
/// (an absent grad counts as zero).
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  void init(const std::vector<TensorPtr>& params);
  void step(const std::vector<TensorPtr>& params);

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace icps::nn
