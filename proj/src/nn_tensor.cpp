#include "icps/nn/tensor.hpp"

#include <unordered_set>

namespace icps::nn {

TensorPtr Tensor::create(std::vector<std::int64_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  std::int64_t n = 1;
  for (auto d : t->shape) {
    if (d <= 0) throw ShapeMismatch("non-positive dimension");
    n *= d;
  }
  t->values.assign(static_cast<std::size_t>(n), 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::from_values(std::vector<std::int64_t> shape,
                              std::vector<double> v, bool requires_grad) {
  auto t = create(std::move(shape), requires_grad);
  if (v.size() != t->values.size())
    throw ShapeMismatch("value count does not match shape");
  t->values = std::move(v);
  return t;
}

TensorPtr Tensor::scalar(double v) { return from_values({1}, {v}); }

bool any_requires_grad(const std::vector<TensorPtr>& ts) {
  for (const auto& t : ts)
    if (t && t->requires_grad) return true;
  return false;
}

void backward(const TensorPtr& root) {
  if (!root) throw ShapeMismatch("null root");
  if (root->numel() != 1) throw NonScalarOutput("backward needs a scalar root");

  // Iterative post-order DFS; reverse gives root-first topological order.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  std::vector<std::pair<Tensor*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
}

}  // namespace icps::nn
