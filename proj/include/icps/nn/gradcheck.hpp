#pragma once

#include <functional>
#include <vector>

#include "icps/nn/tensor.hpp"

namespace icps::nn {

using GraphFn = std::function<TensorPtr(const std::vector<TensorPtr>&)>;

/// Compares reverse-mode gradients of a scalar-valued graph against
/// central finite differences (f(x+e)-f(x-e))/2e, element by element over
/// every input with requires_grad set. Returns the max relative error
/// with denominator max(|analytic|, |numeric|, 1e-8). The graph builder
/// is re-invoked for each probe, so any masking inside must be seeded.
double grad_check(const GraphFn& f, const std::vector<TensorPtr>& inputs,
                  double eps = 1e-5);

}  // namespace icps::nn
