#include "icps/model.hpp"

#include <cmath>

#include "icps/errors.hpp"
#include "icps/rng.hpp"

namespace icps {

namespace {

// Fan-in scaled uniform init: U(-L, L) with L = sqrt(3/fan_in), which
// gives variance 1/fan_in. Biases start at zero, gamma at one.
nn::TensorPtr init_uniform(std::vector<std::int64_t> shape,
                           std::int64_t fan_in, SplitMix64& rng) {
  auto t = nn::Tensor::create(std::move(shape), /*requires_grad=*/true);
  const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
  for (double& v : t->values) v = rng.next_range(-limit, limit);
  return t;
}

nn::TensorPtr init_const(std::vector<std::int64_t> shape, double value) {
  auto t = nn::Tensor::create(std::move(shape), /*requires_grad=*/true);
  for (double& v : t->values) v = value;
  return t;
}

void validate_common(int input_h, int input_w, const std::vector<int>& filters,
                     const std::vector<int>& widths, double dropout) {
  if (input_h < 2 || input_w < 2) throw InvalidConfig("input size too small");
  if (filters.empty()) throw InvalidConfig("need at least one conv stage");
  if (widths.empty()) throw InvalidConfig("need at least one dense layer");
  for (int f : filters)
    if (f < 1) throw InvalidConfig("conv filter count must be positive");
  for (int w : widths)
    if (w < 1) throw InvalidConfig("dense width must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw InvalidConfig("dropout rate must be in [0,1)");
  int h = input_h, w = input_w;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    if (h < 2 || w < 2)
      throw InvalidConfig("input too small for the conv stage count");
    h /= 2;
    w /= 2;
  }
}

CnnModel build_common(ModelKind kind, int input_h, int input_w, int outputs,
                      const std::vector<int>& filters,
                      const std::vector<int>& widths, std::uint64_t seed) {
  CnnModel m;
  m.kind = kind;
  m.input_h = input_h;
  m.input_w = input_w;
  m.outputs = outputs;
  m.conv_filters = filters;
  m.dense_widths = widths;

  SplitMix64 rng(derive_seed(seed, 0x6d6f64656cULL));  // "model" stream
  int in_c = 3;
  for (int f : filters) {
    CnnModel::ConvStage s;
    s.kernel = init_uniform({3, 3, in_c, f}, 9LL * in_c, rng);
    s.bias = init_const({f}, 0.0);
    s.gamma = init_const({f}, 1.0);
    s.beta = init_const({f}, 0.0);
    s.stats.reset(f);
    m.conv.push_back(std::move(s));
    in_c = f;
  }
  int in_w = in_c;  // global average pool leaves [n, last_filters]
  for (int w : widths) {
    CnnModel::DenseBlock d;
    d.weight = init_uniform({in_w, w}, in_w, rng);
    d.bias = init_const({w}, 0.0);
    d.gamma = init_const({w}, 1.0);
    d.beta = init_const({w}, 0.0);
    d.stats.reset(w);
    m.hidden.push_back(std::move(d));
    in_w = w;
  }
  m.head_w = init_uniform({in_w, outputs}, in_w, rng);
  m.head_b = init_const({outputs}, 0.0);
  return m;
}

}  // namespace

void ClassifierConfig::validate() const {
  if (num_classes < 2) throw InvalidConfig("classifier needs >= 2 classes");
  validate_common(input_h, input_w, conv_filters, dense_widths, dropout_rate);
}

void RegressorConfig::validate() const {
  validate_common(input_h, input_w, conv_filters, dense_widths, dropout_rate);
  if (!(dropconnect_rate >= 0.0 && dropconnect_rate < 1.0))
    throw InvalidConfig("dropconnect rate must be in [0,1)");
  if (activity_lambda < 0.0) throw InvalidConfig("activity lambda must be >= 0");
  if (!(beta > 0.0)) throw InvalidConfig("beta must be > 0");
}

CnnModel build_classifier(const ClassifierConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  CnnModel m = build_common(ModelKind::Classifier, cfg.input_h, cfg.input_w,
                            cfg.num_classes, cfg.conv_filters,
                            cfg.dense_widths, seed);
  m.dropout_rate = cfg.dropout_rate;
  m.use_batchnorm = cfg.batchnorm;
  return m;
}

CnnModel build_regressor(const RegressorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  CnnModel m = build_common(ModelKind::Regressor, cfg.input_h, cfg.input_w,
                            kRegressorOutputs, cfg.conv_filters,
                            cfg.dense_widths, seed);
  m.dropout_rate = cfg.dropout_rate;
  m.dropconnect_rate = cfg.dropconnect_rate;
  m.activity_lambda = cfg.activity_lambda;
  m.beta = cfg.beta;
  m.use_batchnorm = cfg.batchnorm;
  return m;
}

CnnModel::ForwardResult CnnModel::forward(const nn::TensorPtr& x,
                                          nn::Mode mode,
                                          std::uint64_t mask_seed) {
  if (x->rank() != 4 || x->dim(1) != input_h || x->dim(2) != input_w ||
      x->dim(3) != 3)
    throw ShapeMismatch("model input must be [n,h,w,3] matching the config");

  ForwardResult r;
  nn::TensorPtr t = x;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    t = nn::conv2d(t, conv[i].kernel, conv[i].bias, 1, nn::Padding::Same);
    if (use_batchnorm)
      t = nn::batchnorm(t, conv[i].gamma, conv[i].beta, conv[i].stats, mode);
    t = nn::relu(t);
    t = nn::maxpool2x2(t);
  }
  t = nn::global_avg_pool(t);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    nn::TensorPtr w = hidden[i].weight;
    if (kind == ModelKind::Regressor && dropconnect_rate > 0.0)
      w = nn::dropout_mask(w, dropconnect_rate, nn::MaskKind::DropConnect, mode,
                           derive_seed(mask_seed, 100 + i));
    t = nn::dense(t, w, hidden[i].bias);
    t = kind == ModelKind::Classifier ? nn::swish(t) : nn::relu(t);
    r.hidden_activations.push_back(t);
    if (use_batchnorm)
      t = nn::batchnorm(t, hidden[i].gamma, hidden[i].beta, hidden[i].stats,
                        mode);
    if (dropout_rate > 0.0)
      t = nn::dropout_mask(t, dropout_rate, nn::MaskKind::Dropout, mode,
                           derive_seed(mask_seed, 200 + i));
  }
  r.out = nn::dense(t, head_w, head_b);
  return r;
}

std::vector<nn::TensorPtr> CnnModel::trainable_params() const {
  std::vector<nn::TensorPtr> out;
  for (const auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, nn::TensorPtr>> CnnModel::named_params()
    const {
  std::vector<std::pair<std::string, nn::TensorPtr>> out;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const std::string p = "conv" + std::to_string(i) + ".";
    out.emplace_back(p + "kernel", conv[i].kernel);
    out.emplace_back(p + "bias", conv[i].bias);
    if (use_batchnorm) {
      out.emplace_back(p + "bn_gamma", conv[i].gamma);
      out.emplace_back(p + "bn_beta", conv[i].beta);
    }
  }
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const std::string p = "dense" + std::to_string(i) + ".";
    out.emplace_back(p + "weight", hidden[i].weight);
    out.emplace_back(p + "bias", hidden[i].bias);
    if (use_batchnorm) {
      out.emplace_back(p + "bn_gamma", hidden[i].gamma);
      out.emplace_back(p + "bn_beta", hidden[i].beta);
    }
  }
  out.emplace_back("head.weight", head_w);
  out.emplace_back("head.bias", head_b);
  return out;
}

std::int64_t CnnModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : named_params()) n += t->numel();
  return n;
}

std::vector<double> CnnModel::snapshot_state() const {
  std::vector<double> blob;
  for (const auto& [name, t] : named_params())
    blob.insert(blob.end(), t->values.begin(), t->values.end());
  auto push_stats = [&blob](const nn::BatchNormStats& s) {
    blob.insert(blob.end(), s.mean.begin(), s.mean.end());
    blob.insert(blob.end(), s.var.begin(), s.var.end());
  };
  for (const auto& s : conv) push_stats(s.stats);
  for (const auto& d : hidden) push_stats(d.stats);
  return blob;
}

void CnnModel::restore_state(const std::vector<double>& blob) {
  std::size_t pos = 0;
  auto take = [&blob, &pos](std::vector<double>& dst) {
    if (pos + dst.size() > blob.size())
      throw ShapeMismatch("state blob too short");
    std::copy(blob.begin() + pos, blob.begin() + pos + dst.size(), dst.begin());
    pos += dst.size();
  };
  for (const auto& [name, t] : named_params()) take(t->values);
  for (auto& s : conv) {
    take(s.stats.mean);
    take(s.stats.var);
  }
  for (auto& d : hidden) {
    take(d.stats.mean);
    take(d.stats.var);
  }
  if (pos != blob.size()) throw ShapeMismatch("state blob size mismatch");
}

void CnnModel::zero_grads() {
  for (const auto& [name, t] : named_params()) t->grad.clear();
}

}  // namespace icps
