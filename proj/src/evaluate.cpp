#include "icps/pipeline/evaluate.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "icps/nn/ops.hpp"

namespace icps {

namespace {

nn::TensorPtr image_tensor(const ImageRGB& img) {
  auto x = nn::Tensor::create({1, img.height, img.width, 3});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    x->values[i] = img.pixels[i] / 255.0;
  return x;
}

Pose decode_regressor_row(const double* row, const NormalizationBounds& bounds) {
  Pose pose;
  pose.position = denormalize_position({row[0], row[1], row[2]}, bounds);
  QuaternionWPQR q{row[3], row[4], row[5], row[6]};
  if (q.norm() <= 1e-12) q = {1.0, 0.0, 0.0, 0.0};  // degenerate raw output
  pose.orientation = quat_canonicalize(quat_normalize(q));
  return pose;
}

std::vector<std::size_t> test_indices(const DatasetManifest& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    if (m.samples[i].split == "test") out.push_back(i);
  if (out.empty()) throw EmptyInput("manifest has no test samples");
  return out;
}

int class_index(const DatasetManifest& m, int scene_id) {
  for (std::size_t i = 0; i < m.scenes.size(); ++i)
    if (m.scenes[i].spec.id == scene_id) return static_cast<int>(i);
  throw UnknownScene("sample references unknown scene");
}

}  // namespace

int argmax_route(const std::vector<double>& scores) {
  if (scores.empty()) throw EmptyInput("argmax_route: empty scores");
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

TandemResult tandem_infer(const ImageRGB& image, CnnModel& classifier,
                          RegressorRegistry& registry) {
  auto x = image_tensor(image);
  auto logits = classifier.forward(x, nn::Mode::Infer, 0).out;
  TandemResult result;
  result.probabilities = nn::softmax_values(*logits);
  result.scene_id = argmax_route(result.probabilities);

  RegressorEntry& entry = registry.get(result.scene_id);
  auto out = entry.model.forward(x, nn::Mode::Infer, 0).out;
  result.pose = decode_regressor_row(out->values.data(), entry.bounds);
  return result;
}

EvalReport summarize_predictions(const DatasetManifest& m,
                                 const std::vector<SamplePrediction>& preds) {
  const int classes = static_cast<int>(m.scenes.size());
  const auto test_idx = test_indices(m);
  if (preds.size() != test_idx.size())
    throw ShapeMismatch("one prediction per test sample required");

  EvalReport r;
  for (const auto& s : m.scenes) r.scene_names.push_back(s.spec.name);
  r.confusion.assign(classes, std::vector<long>(classes, 0));
  r.per_scene.resize(classes);
  for (int c = 0; c < classes; ++c)
    r.per_scene[c].scene_id = m.scenes[c].spec.id;

  long correct = 0, n_correct_routed = 0;
  std::array<double, 3> sum_m{}, sum_norm{}, routed_sum_m{};
  double sum_quat = 0.0;
  std::vector<std::array<double, 3>> scene_sum_m(classes,
                                                 std::array<double, 3>{});
  std::vector<std::array<double, 3>> scene_sum_norm(classes,
                                                    std::array<double, 3>{});
  std::vector<double> scene_sum_quat(classes, 0.0);

  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    const auto& sample = m.samples[test_idx[k]];
    const auto& pred = preds[k];
    const int truth = class_index(m, sample.scene_id);
    r.confusion[truth][pred.predicted_class] += 1;
    const bool routed_right = pred.predicted_class == truth;
    if (routed_right) ++correct;
    else ++r.misroute_count;
    if (!pred.has_pose) continue;

    for (int a = 0; a < 3; ++a)
      routed_sum_m[a] +=
          std::abs(pred.pose_m.position[a] - sample.pose.position[a]);
    ++r.routed_total;
    if (!routed_right) continue;

    ++n_correct_routed;
    for (int a = 0; a < 3; ++a) {
      const double err_m =
          std::abs(pred.pose_m.position[a] - sample.pose.position[a]);
      const double err_n = std::abs(pred.pos_norm[a] - (*sample.norm_pos)[a]);
      sum_m[a] += err_m;
      sum_norm[a] += err_n;
      scene_sum_m[truth][a] += err_m;
      scene_sum_norm[truth][a] += err_n;
    }
    const double qerr =
        quat_angular_error_deg(pred.pose_m.orientation, sample.pose.orientation);
    sum_quat += qerr;
    scene_sum_quat[truth] += qerr;
    r.per_scene[truth].routed += 1;
  }

  r.total = static_cast<long>(test_idx.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  if (n_correct_routed > 0) {
    for (int a = 0; a < 3; ++a) {
      r.pos_mae_m[a] = sum_m[a] / static_cast<double>(n_correct_routed);
      r.pos_mae_norm[a] = sum_norm[a] / static_cast<double>(n_correct_routed);
    }
    r.quat_mae_deg = sum_quat / static_cast<double>(n_correct_routed);
  }
  if (r.routed_total > 0)
    for (int a = 0; a < 3; ++a)
      r.routed_pos_mae_m[a] =
          routed_sum_m[a] / static_cast<double>(r.routed_total);
  for (int c = 0; c < classes; ++c) {
    if (r.per_scene[c].routed == 0) continue;
    const double n = static_cast<double>(r.per_scene[c].routed);
    for (int a = 0; a < 3; ++a) {
      r.per_scene[c].pos_mae_m[a] = scene_sum_m[c][a] / n;
      r.per_scene[c].pos_mae_norm[a] = scene_sum_norm[c][a] / n;
    }
    r.per_scene[c].quat_mae_deg = scene_sum_quat[c] / n;
  }
  return r;
}

EvalReport evaluate_tandem(const DatasetManifest& m, ImageStore& images,
                           CnnModel& classifier, RegressorRegistry& registry) {
  const int classes = static_cast<int>(m.scenes.size());
  const auto test_idx = test_indices(m);

  // Classify in chunks, then run each sample through its routed
  // regressor.
  std::vector<SamplePrediction> preds(test_idx.size());
  const std::size_t chunk = 64;
  const std::size_t per =
      static_cast<std::size_t>(m.image_height) * m.image_width * 3;
  for (std::size_t lo = 0; lo < test_idx.size(); lo += chunk) {
    const std::size_t hi = std::min(test_idx.size(), lo + chunk);
    auto x = nn::Tensor::create(
        {static_cast<std::int64_t>(hi - lo), m.image_height, m.image_width, 3});
    for (std::size_t k = lo; k < hi; ++k) {
      const ImageRGB& img = images.get(m.samples[test_idx[k]].image);
      for (std::size_t i = 0; i < per; ++i)
        x->values[(k - lo) * per + i] = img.pixels[i] / 255.0;
    }
    auto logits = classifier.forward(x, nn::Mode::Infer, 0).out;
    for (std::size_t k = lo; k < hi; ++k) {
      std::vector<double> row(
          logits->values.begin() +
              static_cast<std::ptrdiff_t>((k - lo) * classes),
          logits->values.begin() +
              static_cast<std::ptrdiff_t>((k - lo + 1) * classes));
      preds[k].predicted_class = argmax_route(row);
    }
  }
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    const int pred_scene_id = m.scenes[preds[k].predicted_class].spec.id;
    if (!registry.has(pred_scene_id)) continue;
    RegressorEntry& entry = registry.get(pred_scene_id);
    auto x = image_tensor(images.get(m.samples[test_idx[k]].image));
    auto out = entry.model.forward(x, nn::Mode::Infer, 0).out;
    preds[k].has_pose = true;
    preds[k].pos_norm = {out->values[0], out->values[1], out->values[2]};
    preds[k].pose_m = decode_regressor_row(out->values.data(), entry.bounds);
  }
  return summarize_predictions(m, preds);
}

void write_eval_report_json(const EvalReport& r, const std::string& path) {
  nlohmann::ordered_json j;
  j["scene_names"] = r.scene_names;
  j["total_test_samples"] = r.total;
  j["accuracy"] = r.accuracy;
  j["confusion"] = r.confusion;
  j["misroute_count"] = r.misroute_count;
  j["pos_mae_m"] = r.pos_mae_m;
  j["pos_mae_norm"] = r.pos_mae_norm;
  j["quat_mae_deg"] = r.quat_mae_deg;
  j["routed_pos_mae_m"] = r.routed_pos_mae_m;
  j["routed_total"] = r.routed_total;
  j["per_scene"] = nlohmann::ordered_json::array();
  for (const auto& s : r.per_scene) {
    nlohmann::ordered_json js;
    js["scene_id"] = s.scene_id;
    js["routed"] = s.routed;
    js["pos_mae_m"] = s.pos_mae_m;
    js["pos_mae_norm"] = s.pos_mae_norm;
    js["quat_mae_deg"] = s.quat_mae_deg;
    j["per_scene"].push_back(std::move(js));
  }
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write eval report: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace icps
