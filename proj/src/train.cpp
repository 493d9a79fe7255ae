#include "icps/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "icps/nn/adam.hpp"
#include "icps/nn/ops.hpp"
#include "icps/rng.hpp"

namespace icps {

namespace {

// Stream tags for the derived seed chains.
constexpr std::uint64_t kShuffleTag = 0x73687566ull;  // "shuf"
constexpr std::uint64_t kAugmentTag = 0x6175676dull;  // "augm"
constexpr std::uint64_t kMaskTag = 0x6d61736bull;     // "mask"

std::vector<std::size_t> split_indices(const DatasetManifest& m,
                                       const std::string& split,
                                       int scene_id = -1) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const auto& s = m.samples[i];
    if (s.split == split && (scene_id < 0 || s.scene_id == scene_id))
      out.push_back(i);
  }
  return out;
}

// Batch boundaries with a minimum batch of 2 rows (train-mode batch norm
// needs at least 2): a trailing singleton joins the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                              std::size_t bs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = std::min(n, start + bs);
    if (n - end == 1) end = n;
    out.emplace_back(start, end);
    start = end;
  }
  return out;
}

nn::TensorPtr batch_images(const DatasetManifest& m, ImageStore& images,
                           const std::vector<std::size_t>& idx,
                           std::size_t lo, std::size_t hi, bool augment_on,
                           const AugmentationPolicy& policy,
                           std::uint64_t seed, int epoch) {
  const std::int64_t b = static_cast<std::int64_t>(hi - lo);
  auto x = nn::Tensor::create({b, m.image_height, m.image_width, 3});
  const std::size_t per = static_cast<std::size_t>(m.image_height) *
                          m.image_width * 3;
  for (std::size_t k = lo; k < hi; ++k) {
    const auto& sample = m.samples[idx[k]];
    const ImageRGB& stored = images.get(sample.image);
    double* dst = x->values.data() + (k - lo) * per;
    if (augment_on) {
      const ImageRGB aug = augment(
          stored, policy,
          derive_seed(seed, kAugmentTag, static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(idx[k])));
      for (std::size_t i = 0; i < per; ++i) dst[i] = aug.pixels[i] / 255.0;
    } else {
      for (std::size_t i = 0; i < per; ++i) dst[i] = stored.pixels[i] / 255.0;
    }
  }
  return x;
}

int class_index_of(const DatasetManifest& m, int scene_id) {
  for (std::size_t i = 0; i < m.scenes.size(); ++i)
    if (m.scenes[i].spec.id == scene_id) return static_cast<int>(i);
  throw UnknownScene("sample references unknown scene id");
}

}  // namespace

const ImageRGB& ImageStore::get(const std::string& rel_path) {
  auto it = cache_.find(rel_path);
  if (it != cache_.end()) return it->second;
  const auto path = std::filesystem::path(root_) / rel_path;
  return cache_.emplace(rel_path, read_ppm(path.string())).first->second;
}

void write_curves_csv(const TrainReport& report, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoFailure("cannot write curves CSV: " + path);
  std::fprintf(f, "epoch,train_loss,val_loss,train_acc,val_acc\n");
  for (const auto& r : report.rows)
    std::fprintf(f, "%d,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                 r.val_loss, r.train_acc, r.val_acc);
  std::fclose(f);
}

TrainReport train_classifier_model(CnnModel& model, const DatasetManifest& m,
                                   ImageStore& images,
                                   const TrainSettings& cfg) {
  if (model.kind != ModelKind::Classifier)
    throw InvalidConfig("train_classifier_model needs a classifier");
  const int classes = model.outputs;
  auto train_idx = split_indices(m, "train");
  auto val_idx = split_indices(m, "val");
  if (train_idx.empty() || val_idx.empty())
    throw InvalidConfig("manifest has no train/val split");

  auto params = model.trainable_params();
  nn::AdamState adam(
      {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  adam.init(params);

  auto make_labels = [&](const std::vector<std::size_t>& idx, std::size_t lo,
                         std::size_t hi) {
    auto y = nn::Tensor::create(
        {static_cast<std::int64_t>(hi - lo), classes});
    for (std::size_t k = lo; k < hi; ++k)
      y->values[(k - lo) * classes +
                class_index_of(m, m.samples[idx[k]].scene_id)] = 1.0;
    return y;
  };

  TrainReport report;
  double best_acc = -1.0;
  std::vector<double> best_state;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng(
        derive_seed(cfg.seed, kShuffleTag, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = train_idx.size() - 1; i > 0; --i)
      std::swap(train_idx[i],
                train_idx[static_cast<std::size_t>(shuffle_rng.next() % (i + 1))]);

    double train_loss = 0.0;
    long train_correct = 0;
    int batch_no = 0;
    for (const auto& [lo, hi] : batch_ranges(train_idx.size(),
                                             static_cast<std::size_t>(cfg.batch_size))) {
      auto x = batch_images(m, images, train_idx, lo, hi, cfg.augment,
                            cfg.augmentation, cfg.seed, epoch);
      auto labels = make_labels(train_idx, lo, hi);
      auto fwd = model.forward(x, nn::Mode::Train,
                               derive_seed(cfg.seed, kMaskTag,
                                           static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(batch_no)));
      auto loss = nn::softmax_cross_entropy(fwd.out, labels);
      train_loss += loss->values[0] * static_cast<double>(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) {
        const double* row = fwd.out->values.data() + (k - lo) * classes;
        const int pred = static_cast<int>(
            std::max_element(row, row + classes) - row);
        if (pred == class_index_of(m, m.samples[train_idx[k]].scene_id))
          ++train_correct;
      }
      model.zero_grads();
      nn::backward(loss);
      adam.step(params);
      ++batch_no;
    }
    train_loss /= static_cast<double>(train_idx.size());

    double val_loss = 0.0;
    long val_correct = 0;
    for (const auto& [lo, hi] : batch_ranges(val_idx.size(), 64)) {
      auto x = batch_images(m, images, val_idx, lo, hi, false,
                            cfg.augmentation, cfg.seed, epoch);
      auto labels = make_labels(val_idx, lo, hi);
      auto fwd = model.forward(x, nn::Mode::Infer, 0);
      auto loss = nn::softmax_cross_entropy(fwd.out, labels);
      val_loss += loss->values[0] * static_cast<double>(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) {
        const double* row = fwd.out->values.data() + (k - lo) * classes;
        const int pred = static_cast<int>(
            std::max_element(row, row + classes) - row);
        if (pred == class_index_of(m, m.samples[val_idx[k]].scene_id))
          ++val_correct;
      }
    }
    val_loss /= static_cast<double>(val_idx.size());
    const double val_acc =
        static_cast<double>(val_correct) / static_cast<double>(val_idx.size());
    const double train_acc = static_cast<double>(train_correct) /
                             static_cast<double>(train_idx.size());
    report.rows.push_back({epoch, train_loss, val_loss, train_acc, val_acc});

    if (val_acc > best_acc) {
      best_acc = val_acc;
      report.best_epoch = epoch;
      best_state = model.snapshot_state();
    }
    if (cfg.early_stop_patience > 0 &&
        epoch - report.best_epoch >= cfg.early_stop_patience)
      break;
  }
  report.best_val_metric = best_acc;
  model.restore_state(best_state);
  return report;
}

TrainReport train_regressor_model(CnnModel& model, const DatasetManifest& m,
                                  ImageStore& images, int scene_id,
                                  const TrainSettings& cfg) {
  if (model.kind != ModelKind::Regressor)
    throw InvalidConfig("train_regressor_model needs a regressor");
  auto train_idx = split_indices(m, "train", scene_id);
  auto val_idx = split_indices(m, "val", scene_id);
  if (train_idx.empty() || val_idx.empty())
    throw InvalidConfig("scene has no train/val split");
  for (std::size_t i : train_idx)
    if (!m.samples[i].norm_pos)
      throw InvalidConfig("normalized labels missing; run compute_class_bounds");

  auto params = model.trainable_params();
  nn::AdamState adam(
      {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  adam.init(params);

  auto make_targets = [&](const std::vector<std::size_t>& idx, std::size_t lo,
                          std::size_t hi) {
    const std::int64_t b = static_cast<std::int64_t>(hi - lo);
    auto pos = nn::Tensor::create({b, 3});
    auto quat = nn::Tensor::create({b, 4});
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& s = m.samples[idx[k]];
      pos->values[(k - lo) * 3 + 0] = s.norm_pos->x;
      pos->values[(k - lo) * 3 + 1] = s.norm_pos->y;
      pos->values[(k - lo) * 3 + 2] = s.norm_pos->z;
      quat->values[(k - lo) * 4 + 0] = s.pose.orientation.w;
      quat->values[(k - lo) * 4 + 1] = s.pose.orientation.p;
      quat->values[(k - lo) * 4 + 2] = s.pose.orientation.q;
      quat->values[(k - lo) * 4 + 3] = s.pose.orientation.r;
    }
    return std::make_pair(pos, quat);
  };
  auto objective = [&](const CnnModel::ForwardResult& fwd,
                       const nn::TensorPtr& pos, const nn::TensorPtr& quat) {
    auto loss = nn::pose_loss(nn::slice_cols(fwd.out, 0, 3),
                              nn::slice_cols(fwd.out, 3, 4), pos, quat,
                              model.beta);
    if (model.activity_lambda > 0.0)
      loss = nn::add(loss, nn::activity_penalty(fwd.hidden_activations,
                                                model.activity_lambda));
    return loss;
  };

  TrainReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_state;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng(
        derive_seed(cfg.seed, kShuffleTag, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = train_idx.size() - 1; i > 0; --i)
      std::swap(train_idx[i],
                train_idx[static_cast<std::size_t>(shuffle_rng.next() % (i + 1))]);

    double train_loss = 0.0;
    int batch_no = 0;
    for (const auto& [lo, hi] : batch_ranges(train_idx.size(),
                                             static_cast<std::size_t>(cfg.batch_size))) {
      auto x = batch_images(m, images, train_idx, lo, hi, cfg.augment,
                            cfg.augmentation, cfg.seed, epoch);
      auto [pos, quat] = make_targets(train_idx, lo, hi);
      auto fwd = model.forward(x, nn::Mode::Train,
                               derive_seed(cfg.seed, kMaskTag,
                                           static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(batch_no)));
      auto loss = objective(fwd, pos, quat);
      train_loss += loss->values[0] * static_cast<double>(hi - lo);
      model.zero_grads();
      nn::backward(loss);
      adam.step(params);
      ++batch_no;
    }
    train_loss /= static_cast<double>(train_idx.size());

    double val_loss = 0.0;
    for (const auto& [lo, hi] : batch_ranges(val_idx.size(), 64)) {
      auto x = batch_images(m, images, val_idx, lo, hi, false,
                            cfg.augmentation, cfg.seed, epoch);
      auto [pos, quat] = make_targets(val_idx, lo, hi);
      auto fwd = model.forward(x, nn::Mode::Infer, 0);
      val_loss += objective(fwd, pos, quat)->values[0] *
                  static_cast<double>(hi - lo);
    }
    val_loss /= static_cast<double>(val_idx.size());
    report.rows.push_back({epoch, train_loss, val_loss, nan, nan});

    if (val_loss < best_loss) {
      best_loss = val_loss;
      report.best_epoch = epoch;
      best_state = model.snapshot_state();
    }
    if (cfg.early_stop_patience > 0 &&
        epoch - report.best_epoch >= cfg.early_stop_patience)
      break;
  }
  report.best_val_metric = best_loss;
  model.restore_state(best_state);
  return report;
}

}  // namespace icps
