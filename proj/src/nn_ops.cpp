#include "icps/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icps/nn/kernels.hpp"
#include "icps/rng.hpp"

namespace icps::nn {

namespace {

std::string g_sabotage;

TensorPtr make_node(std::vector<std::int64_t> shape,
                    std::vector<TensorPtr> parents) {
  auto t = Tensor::create(std::move(shape));
  t->requires_grad = any_requires_grad(parents);
  t->parents = std::move(parents);
  return t;
}

void accumulate(const TensorPtr& p, const std::vector<double>& contribution) {
  p->ensure_grad();
  for (std::size_t i = 0; i < contribution.size(); ++i)
    p->grad[i] += contribution[i];
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void set_sabotage(const std::string& op) { g_sabotage = op; }
const std::string& sabotage() { return g_sabotage; }

TensorPtr dense(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  if (x->rank() != 2 || w->rank() != 2 || b->rank() != 1)
    throw ShapeMismatch("dense: expected x[n,in], W[in,out], b[out]");
  const std::int64_t n = x->dim(0), in = x->dim(1), out = w->dim(1);
  if (w->dim(0) != in || b->dim(0) != out)
    throw ShapeMismatch("dense: dimension mismatch");

  auto y = make_node({n, out}, {x, w, b});
  kernels::dense_forward(x->values.data(), w->values.data(), b->values.data(),
                         y->values.data(), n, in, out);
  if (y->requires_grad) {
    y->backprop = [x, w, b, n, in, out](const Tensor& self) {
      const double* dy = self.grad.data();
      if (x->requires_grad) {
        x->ensure_grad();
        kernels::dense_backward_x(dy, w->values.data(), x->grad.data(), n, in,
                                  out);
      }
      if (w->requires_grad) {
        w->ensure_grad();
        kernels::dense_backward_w(x->values.data(), dy, w->grad.data(), n, in,
                                  out);
        if (sabotage() == "dense")  // test hook: double this contribution
          kernels::dense_backward_w(x->values.data(), dy, w->grad.data(), n,
                                    in, out);
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kernels::dense_backward_b(dy, b->grad.data(), n, out);
      }
    };
  }
  return y;
}

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& k, const TensorPtr& b,
                 std::int64_t stride, Padding padding) {
  if (x->rank() != 4 || k->rank() != 4 || b->rank() != 1)
    throw ShapeMismatch("conv2d: expected x[n,h,w,c], K[kh,kw,c,f], b[f]");
  kernels::ConvDims d{};
  d.n = x->dim(0);
  d.h = x->dim(1);
  d.w = x->dim(2);
  d.c = x->dim(3);
  d.kh = k->dim(0);
  d.kw = k->dim(1);
  d.f = k->dim(3);
  d.stride = stride;
  if (k->dim(2) != d.c) throw ShapeMismatch("conv2d: channel mismatch");
  if (b->dim(0) != d.f) throw ShapeMismatch("conv2d: bias mismatch");
  if (d.kh % 2 == 0 || d.kw % 2 == 0)
    throw ShapeMismatch("conv2d: kernel dims must be odd");
  if (stride < 1) throw ShapeMismatch("conv2d: stride must be >= 1");

  if (padding == Padding::Valid) {
    if (d.h < d.kh || d.w < d.kw)
      throw ShapeMismatch("conv2d: input smaller than kernel");
    d.oh = (d.h - d.kh) / stride + 1;
    d.ow = (d.w - d.kw) / stride + 1;
    d.pad_top = d.pad_left = 0;
  } else if (padding == Padding::Same) {
    d.oh = (d.h + stride - 1) / stride;
    d.ow = (d.w + stride - 1) / stride;
    d.pad_top = std::max<std::int64_t>(0, ((d.oh - 1) * stride + d.kh - d.h)) / 2;
    d.pad_left = std::max<std::int64_t>(0, ((d.ow - 1) * stride + d.kw - d.w)) / 2;
  } else {
    throw UnsupportedPadding();
  }

  auto y = make_node({d.n, d.oh, d.ow, d.f}, {x, k, b});
  kernels::conv2d_forward(x->values.data(), k->values.data(), b->values.data(),
                          y->values.data(), d);
  if (y->requires_grad) {
    y->backprop = [x, k, b, d](const Tensor& self) {
      const double* dy = self.grad.data();
      if (x->requires_grad) {
        x->ensure_grad();
        kernels::conv2d_backward_x(dy, k->values.data(), x->grad.data(), d);
      }
      if (k->requires_grad) {
        k->ensure_grad();
        kernels::conv2d_backward_k(x->values.data(), dy, k->grad.data(), d);
        if (sabotage() == "conv2d")
          kernels::conv2d_backward_k(x->values.data(), dy, k->grad.data(), d);
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kernels::conv2d_backward_b(dy, b->grad.data(), d);
      }
    };
  }
  return y;
}

TensorPtr batchnorm(const TensorPtr& x, const TensorPtr& gamma,
                    const TensorPtr& beta, BatchNormStats& stats, Mode mode,
                    double momentum, double eps) {
  if (x->rank() < 2) throw ShapeMismatch("batchnorm: rank must be >= 2");
  const std::int64_t features = x->dim(x->rank() - 1);
  const std::int64_t rows = x->numel() / features;
  if (gamma->numel() != features || beta->numel() != features)
    throw ShapeMismatch("batchnorm: gamma/beta size mismatch");
  if (stats.mean.size() != static_cast<std::size_t>(features))
    stats.reset(features);

  std::vector<double> mean(features), istd(features);
  if (mode == Mode::Train) {
    if (rows < 2) throw BatchTooSmall("batchnorm needs >= 2 rows in train mode");
    std::vector<double> var(features, 0.0);
    for (std::int64_t f = 0; f < features; ++f) {
      double s = 0.0;
      for (std::int64_t r = 0; r < rows; ++r) s += x->values[r * features + f];
      mean[f] = s / static_cast<double>(rows);
    }
    for (std::int64_t f = 0; f < features; ++f) {
      double s = 0.0;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double dv = x->values[r * features + f] - mean[f];
        s += dv * dv;
      }
      var[f] = s / static_cast<double>(rows);  // biased
      istd[f] = 1.0 / std::sqrt(var[f] + eps);
    }
    for (std::int64_t f = 0; f < features; ++f) {
      stats.mean[f] = momentum * stats.mean[f] + (1.0 - momentum) * mean[f];
      stats.var[f] = momentum * stats.var[f] + (1.0 - momentum) * var[f];
    }
  } else {
    for (std::int64_t f = 0; f < features; ++f) {
      mean[f] = stats.mean[f];
      istd[f] = 1.0 / std::sqrt(stats.var[f] + eps);
    }
  }

  auto y = make_node(x->shape, {x, gamma, beta});
  std::vector<double> xhat(static_cast<std::size_t>(x->numel()));
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t f = 0; f < features; ++f) {
      const std::size_t i = static_cast<std::size_t>(r * features + f);
      xhat[i] = (x->values[i] - mean[f]) * istd[f];
      y->values[i] = gamma->values[f] * xhat[i] + beta->values[f];
    }
  }

  if (y->requires_grad) {
    const bool train = mode == Mode::Train;
    y->backprop = [x, gamma, beta, rows, features, train,
                   xhat = std::move(xhat),
                   istd = std::move(istd)](const Tensor& self) {
      const double* dy = self.grad.data();
      if (gamma->requires_grad) {
        gamma->ensure_grad();
        for (std::int64_t f = 0; f < features; ++f) {
          double s = 0.0;
          for (std::int64_t r = 0; r < rows; ++r)
            s += dy[r * features + f] * xhat[r * features + f];
          gamma->grad[f] += s;
        }
      }
      if (beta->requires_grad) {
        beta->ensure_grad();
        for (std::int64_t f = 0; f < features; ++f) {
          double s = 0.0;
          for (std::int64_t r = 0; r < rows; ++r) s += dy[r * features + f];
          beta->grad[f] += s;
        }
      }
      if (!x->requires_grad) return;
      x->ensure_grad();
      if (!train) {
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t f = 0; f < features; ++f)
            x->grad[r * features + f] +=
                dy[r * features + f] * gamma->values[f] * istd[f];
        return;
      }
      // Exact backward through the batch statistics.
      const double m = static_cast<double>(rows);
      for (std::int64_t f = 0; f < features; ++f) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::int64_t r = 0; r < rows; ++r) {
          const double dxhat = dy[r * features + f] * gamma->values[f];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat[r * features + f];
        }
        for (std::int64_t r = 0; r < rows; ++r) {
          const std::size_t i = static_cast<std::size_t>(r * features + f);
          const double dxhat = dy[i] * gamma->values[f];
          x->grad[i] += (istd[f] / m) *
                        (m * dxhat - sum_dxhat - xhat[i] * sum_dxhat_xhat);
        }
      }
    };
  }
  return y;
}

TensorPtr dropout_mask(const TensorPtr& x, double rate, MaskKind kind,
                       Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidRate("rate must be in [0,1)");
  if (mode == Mode::Infer || rate == 0.0) return x;  // exact identity

  SplitMix64 rng(derive_seed(seed, kind == MaskKind::Dropout ? 0u : 1u));
  const double scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x->values.size());
  for (std::size_t i = 0; i < x->values.size(); ++i)
    (*mask)[i] = rng.next_unit() < rate ? 0.0 : scale;

  auto y = make_node(x->shape, {x});
  for (std::size_t i = 0; i < x->values.size(); ++i)
    y->values[i] = x->values[i] * (*mask)[i];
  if (y->requires_grad) {
    y->backprop = [x, mask](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        x->grad[i] += self.grad[i] * (*mask)[i];
    };
  }
  return y;
}

TensorPtr relu(const TensorPtr& x) {
  auto y = make_node(x->shape, {x});
  for (std::size_t i = 0; i < x->values.size(); ++i)
    y->values[i] = x->values[i] > 0.0 ? x->values[i] : 0.0;
  if (y->requires_grad) {
    y->backprop = [x](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (x->values[i] > 0.0) x->grad[i] += self.grad[i];
    };
  }
  return y;
}

TensorPtr swish(const TensorPtr& x) {
  auto y = make_node(x->shape, {x});
  for (std::size_t i = 0; i < x->values.size(); ++i)
    y->values[i] = x->values[i] * sigmoid(x->values[i]);
  if (y->requires_grad) {
    y->backprop = [x](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double s = sigmoid(x->values[i]);
        x->grad[i] += self.grad[i] * (s + x->values[i] * s * (1.0 - s));
      }
    };
  }
  return y;
}

TensorPtr maxpool2x2(const TensorPtr& x) {
  if (x->rank() != 4) throw ShapeMismatch("maxpool2x2: expected [n,h,w,c]");
  const std::int64_t n = x->dim(0), h = x->dim(1), w = x->dim(2), c = x->dim(3);
  if (h < 2 || w < 2) throw ShapeMismatch("maxpool2x2: input too small");
  const std::int64_t oh = h / 2, ow = w / 2;

  auto y = make_node({n, oh, ow, c}, {x});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(y->numel()));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        for (std::int64_t ci = 0; ci < c; ++ci) {
          double best = -std::numeric_limits<double>::infinity();
          std::int64_t best_idx = 0;
          for (std::int64_t dy = 0; dy < 2; ++dy) {
            for (std::int64_t dx = 0; dx < 2; ++dx) {
              const std::int64_t idx =
                  ((i * h + oy * 2 + dy) * w + ox * 2 + dx) * c + ci;
              if (x->values[idx] > best) {  // strict: first max wins
                best = x->values[idx];
                best_idx = idx;
              }
            }
          }
          const std::int64_t oidx = ((i * oh + oy) * ow + ox) * c + ci;
          y->values[oidx] = best;
          (*argmax)[oidx] = best_idx;
        }
      }
    }
  }
  if (y->requires_grad) {
    y->backprop = [x, argmax](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        x->grad[(*argmax)[i]] += self.grad[i];
    };
  }
  return y;
}

TensorPtr global_avg_pool(const TensorPtr& x) {
  if (x->rank() != 4) throw ShapeMismatch("global_avg_pool: expected [n,h,w,c]");
  const std::int64_t n = x->dim(0), h = x->dim(1), w = x->dim(2), c = x->dim(3);
  const double inv = 1.0 / static_cast<double>(h * w);

  auto y = make_node({n, c}, {x});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (std::int64_t p = 0; p < h * w; ++p)
        s += x->values[(i * h * w + p) * c + ci];
      y->values[i * c + ci] = s * inv;
    }
  }
  if (y->requires_grad) {
    y->backprop = [x, n, h, w, c, inv](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t p = 0; p < h * w; ++p)
          for (std::int64_t ci = 0; ci < c; ++ci)
            x->grad[(i * h * w + p) * c + ci] +=
                self.grad[i * c + ci] * inv;
    };
  }
  return y;
}

TensorPtr softmax_cross_entropy(const TensorPtr& logits,
                                const TensorPtr& onehot) {
  if (logits->rank() != 2 || onehot->rank() != 2 ||
      logits->shape != onehot->shape)
    throw ShapeMismatch("softmax_cross_entropy: logits/labels mismatch");
  const std::int64_t n = logits->dim(0), classes = logits->dim(1);
  for (std::int64_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::int64_t j = 0; j < classes; ++j) {
      const double v = onehot->values[i * classes + j];
      if (v != 0.0 && v != 1.0) throw NonOneHotLabel();
      row_sum += v;
    }
    if (row_sum != 1.0) throw NonOneHotLabel();
  }

  auto probs = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(logits->numel()));
  double loss = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double* z = logits->values.data() + i * classes;
    double zmax = z[0];
    for (std::int64_t j = 1; j < classes; ++j) zmax = std::max(zmax, z[j]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < classes; ++j) {
      const double e = std::exp(z[j] - zmax);
      (*probs)[i * classes + j] = e;
      denom += e;
    }
    const double lse = zmax + std::log(denom);
    for (std::int64_t j = 0; j < classes; ++j) {
      (*probs)[i * classes + j] /= denom;
      if (onehot->values[i * classes + j] == 1.0) loss += lse - z[j];
    }
  }
  loss /= static_cast<double>(n);

  auto y = make_node({1}, {logits, onehot});
  y->values[0] = loss;
  if (y->requires_grad) {
    y->backprop = [logits, onehot, probs, n](const Tensor& self) {
      if (!logits->requires_grad) return;
      logits->ensure_grad();
      const double g = self.grad[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < logits->values.size(); ++i)
        logits->grad[i] += g * ((*probs)[i] - onehot->values[i]);
    };
  }
  return y;
}

std::vector<double> softmax_values(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeMismatch("softmax_values: expected [n,C]");
  const std::int64_t n = logits.dim(0), classes = logits.dim(1);
  std::vector<double> out(static_cast<std::size_t>(logits.numel()));
  for (std::int64_t i = 0; i < n; ++i) {
    const double* z = logits.values.data() + i * classes;
    double zmax = z[0];
    for (std::int64_t j = 1; j < classes; ++j) zmax = std::max(zmax, z[j]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < classes; ++j) {
      out[i * classes + j] = std::exp(z[j] - zmax);
      denom += out[i * classes + j];
    }
    for (std::int64_t j = 0; j < classes; ++j) out[i * classes + j] /= denom;
  }
  return out;
}

TensorPtr pose_loss(const TensorPtr& pos_pred, const TensorPtr& quat_pred,
                    const TensorPtr& pos_true, const TensorPtr& quat_true,
                    double beta) {
  if (pos_pred->rank() != 2 || pos_pred->dim(1) != 3)
    throw ShapeMismatch("pose_loss: positions must be [n,3]");
  if (quat_pred->rank() != 2 || quat_pred->dim(1) != 4)
    throw ShapeMismatch("pose_loss: quaternions must be [n,4]");
  const std::int64_t n = pos_pred->dim(0);
  if (pos_true->shape != pos_pred->shape || quat_true->shape != quat_pred->shape ||
      quat_pred->dim(0) != n)
    throw ShapeMismatch("pose_loss: batch mismatch");
  if (!(beta > 0.0)) throw InvalidConfig("pose_loss: beta must be > 0");

  // Residuals against the normalized ground-truth quaternion.
  auto pres = std::make_shared<std::vector<double>>(n * 3);
  auto qres = std::make_shared<std::vector<double>>(n * 4);
  auto pdist = std::make_shared<std::vector<double>>(n);
  auto qdist = std::make_shared<std::vector<double>>(n);
  double loss = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double qnorm = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double v = quat_true->values[i * 4 + j];
      qnorm += v * v;
    }
    qnorm = std::sqrt(qnorm);
    if (qnorm <= 1e-12) throw ZeroNormQuaternion("pose_loss: ground truth");
    double dp = 0.0, dq = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double r = pos_pred->values[i * 3 + j] - pos_true->values[i * 3 + j];
      (*pres)[i * 3 + j] = r;
      dp += r * r;
    }
    for (int j = 0; j < 4; ++j) {
      const double r =
          quat_pred->values[i * 4 + j] - quat_true->values[i * 4 + j] / qnorm;
      (*qres)[i * 4 + j] = r;
      dq += r * r;
    }
    (*pdist)[i] = std::sqrt(dp);
    (*qdist)[i] = std::sqrt(dq);
    loss += (*pdist)[i] + beta * (*qdist)[i];
  }
  loss /= static_cast<double>(n);

  auto y = make_node({1}, {pos_pred, quat_pred, pos_true, quat_true});
  y->values[0] = loss;
  if (y->requires_grad) {
    y->backprop = [pos_pred, quat_pred, pres, qres, pdist, qdist, beta,
                   n](const Tensor& self) {
      const double g = self.grad[0] / static_cast<double>(n);
      if (pos_pred->requires_grad) {
        pos_pred->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) {
          if ((*pdist)[i] <= 1e-12) continue;
          const double s = g / (*pdist)[i];
          for (int j = 0; j < 3; ++j)
            pos_pred->grad[i * 3 + j] += s * (*pres)[i * 3 + j];
        }
      }
      if (quat_pred->requires_grad) {
        quat_pred->ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) {
          if ((*qdist)[i] <= 1e-12) continue;
          const double s = g * beta / (*qdist)[i];
          for (int j = 0; j < 4; ++j)
            quat_pred->grad[i * 4 + j] += s * (*qres)[i * 4 + j];
        }
      }
    };
  }
  return y;
}

TensorPtr activity_penalty(const std::vector<TensorPtr>& activations,
                           double lambda) {
  if (lambda < 0.0) throw InvalidConfig("activity_penalty: lambda must be >= 0");
  std::int64_t total = 0;
  for (const auto& a : activations) total += a->numel();

  auto y = make_node({1}, activations);
  double s = 0.0;
  for (const auto& a : activations)
    for (double v : a->values) s += v * v;
  y->values[0] =
      (total > 0 && lambda > 0.0) ? lambda * s / static_cast<double>(total) : 0.0;
  if (y->requires_grad && total > 0 && lambda > 0.0) {
    const double coeff = 2.0 * lambda / static_cast<double>(total);
    y->backprop = [activations, coeff](const Tensor& self) {
      const double g = self.grad[0] * coeff;
      for (const auto& a : activations) {
        if (!a->requires_grad) continue;
        a->ensure_grad();
        for (std::size_t i = 0; i < a->values.size(); ++i)
          a->grad[i] += g * a->values[i];
      }
    };
  }
  return y;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) throw ShapeMismatch("add: shape mismatch");
  auto y = make_node(a->shape, {a, b});
  for (std::size_t i = 0; i < a->values.size(); ++i)
    y->values[i] = a->values[i] + b->values[i];
  if (y->requires_grad) {
    y->backprop = [a, b](const Tensor& self) {
      if (a->requires_grad) accumulate(a, self.grad);
      if (b->requires_grad) accumulate(b, self.grad);
    };
  }
  return y;
}

TensorPtr mul_elem(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) throw ShapeMismatch("mul_elem: shape mismatch");
  auto y = make_node(a->shape, {a, b});
  for (std::size_t i = 0; i < a->values.size(); ++i)
    y->values[i] = a->values[i] * b->values[i];
  if (y->requires_grad) {
    y->backprop = [a, b](const Tensor& self) {
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          a->grad[i] += self.grad[i] * b->values[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          b->grad[i] += self.grad[i] * a->values[i];
      }
    };
  }
  return y;
}

TensorPtr sum_all(const TensorPtr& x) {
  auto y = make_node({1}, {x});
  double s = 0.0;
  for (double v : x->values) s += v;
  y->values[0] = s;
  if (y->requires_grad) {
    y->backprop = [x](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (double& g : x->grad) g += self.grad[0];
    };
  }
  return y;
}

TensorPtr slice_cols(const TensorPtr& x, std::int64_t start,
                     std::int64_t count) {
  if (x->rank() != 2) throw ShapeMismatch("slice_cols: expected [n,m]");
  const std::int64_t n = x->dim(0), m = x->dim(1);
  if (start < 0 || count < 1 || start + count > m)
    throw ShapeMismatch("slice_cols: range out of bounds");
  auto y = make_node({n, count}, {x});
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < count; ++j)
      y->values[i * count + j] = x->values[i * m + start + j];
  if (y->requires_grad) {
    y->backprop = [x, n, m, start, count](const Tensor& self) {
      if (!x->requires_grad) return;
      x->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < count; ++j)
          x->grad[i * m + start + j] += self.grad[i * count + j];
    };
  }
  return y;
}

}  // namespace icps::nn
