#include "icps/nn/adam.hpp"

#include <cmath>

namespace icps::nn {

void AdamState::init(const std::vector<TensorPtr>& params) {
  t_ = 0;
  m_.clear();
  v_.clear();
  for (const auto& p : params) {
    m_.emplace_back(p->values.size(), 0.0);
    v_.emplace_back(p->values.size(), 0.0);
  }
}

void AdamState::step(const std::vector<TensorPtr>& params) {
  if (params.size() != m_.size())
    throw ShapeMismatch("adam: parameter count changed since init");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    if (t.values.size() != m_[p].size())
      throw ShapeMismatch("adam: parameter shape changed since init");
    const bool has_grad = !t.grad.empty();
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      const double g = has_grad ? t.grad[i] : 0.0;
      m_[p][i] = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g;
      v_[p][i] = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[p][i] / bc1;
      const double vhat = v_[p][i] / bc2;
      t.values[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace icps::nn
