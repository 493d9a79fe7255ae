#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "icps/errors.hpp"

namespace icps::nn {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major tensor doubling as a node in the reverse-mode tape.
/// Leaves are parameters or inputs; op results carry the edges back to
/// their inputs plus a closure that scatters the incoming gradient.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized on first accumulation
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  std::function<void(const Tensor& self)> backprop;

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
  }
  void zero_grad() { grad.assign(values.size(), 0.0); }

  static TensorPtr create(std::vector<std::int64_t> shape,
                          bool requires_grad = false);
  static TensorPtr from_values(std::vector<std::int64_t> shape,
                               std::vector<double> v,
                               bool requires_grad = false);
  static TensorPtr scalar(double v);
};

/// Reverse sweep from a scalar root: seeds d(root)/d(root) = 1 and runs
/// every node's backprop closure in reverse topological order.
void backward(const TensorPtr& root);

/// True if gradients should flow into any of these inputs.
bool any_requires_grad(const std::vector<TensorPtr>& ts);

}  // namespace icps::nn
