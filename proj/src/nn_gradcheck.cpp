#include "icps/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace icps::nn {

double grad_check(const GraphFn& f, const std::vector<TensorPtr>& inputs,
                  double eps) {
  for (const auto& in : inputs) in->grad.clear();
  TensorPtr out = f(inputs);
  if (!out || out->numel() != 1)
    throw NonScalarOutput("grad_check needs a scalar-valued graph");
  backward(out);

  std::vector<std::vector<double>> analytic;
  for (const auto& in : inputs) {
    if (in->grad.empty())
      analytic.emplace_back(in->values.size(), 0.0);
    else
      analytic.push_back(in->grad);
  }

  double max_rel = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!inputs[t]->requires_grad) continue;
    Tensor& in = *inputs[t];
    for (std::size_t i = 0; i < in.values.size(); ++i) {
      const double saved = in.values[i];
      in.values[i] = saved + eps;
      const double fp = f(inputs)->values[0];
      in.values[i] = saved - eps;
      const double fm = f(inputs)->values[0];
      in.values[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace icps::nn
