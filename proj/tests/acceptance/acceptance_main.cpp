// Acceptance suite: one pass/fail line per criterion, nonzero exit if
// any fails. Criteria 5, 8 and 11 drive the shipped CLI end to end on
// the desk-scale config; the rest run in process.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "icps/geometry.hpp"
#include "icps/nn/adam.hpp"
#include "icps/nn/gradcheck.hpp"
#include "icps/nn/ops.hpp"
#include "icps/pipeline/dataset.hpp"
#include "icps/pipeline/evaluate.hpp"
#include "icps/pipeline/manifest.hpp"
#include "icps/rng.hpp"
#include "icps/trajectory.hpp"

namespace fs = std::filesystem;
using namespace icps;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(ICPS_CLI) + " " + args + " 2>&1";
  std::string output;
  char buffer[4096];
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  while (fgets(buffer, sizeof(buffer), pipe)) output += buffer;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

const std::string kDeskConfig = std::string(ICPS_SOURCE_DIR) + "/configs/desk.json";
const std::string kFullConfig =
    std::string(ICPS_SOURCE_DIR) + "/configs/fullscale_dryrun.json";

int pipeline_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(4u, hw == 0 ? 1u : hw));
}

// Runs the full desk pipeline into out_dir. Returns wall seconds, or a
// negative value on the first failing step.
double run_desk_pipeline(const std::string& out_dir, std::string& log) {
  const std::string t = " --threads " + std::to_string(pipeline_threads());
  const std::string common =
      " --config " + kDeskConfig + " --out " + out_dir + t;
  const std::string manifest = out_dir + "/dataset/manifest.json";
  const auto t0 = Clock::now();
  for (const std::string step : {
           "generate" + common,
           "split" + common + " --manifest " + manifest,
           "train-classifier" + common + " --manifest " + manifest,
           "train-regressor" + common + " --manifest " + manifest,
           "evaluate" + common + " --manifest " + manifest +
               " --classifier " + out_dir + "/classifier.ckpt --regressors " +
               out_dir + "/regressors",
       }) {
    const RunResult r = run_cli(step);
    log += "$ icps " + step + "\n" + r.output;
    if (r.exit_code != 0) {
      log += "step failed with exit " + std::to_string(r.exit_code) + "\n";
      return -1.0;
    }
  }
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void criterion_1_reference_only() {
  // The published reference errors (X 0.0026 m, Y 0.0010 m, Z 0.0034 m,
  // quaternion 0.0086 deg; test accuracy 98.099) depend on the original
  // museum photogrammetry assets and full-scale pretrained backbones,
  // neither of which is available here. They are recorded in README.md
  // as references only; the criteria below are the substituted gate.
  const std::string readme = read_file(std::string(ICPS_SOURCE_DIR) + "/README.md");
  const bool documented = readme.find("0.0026") != std::string::npos &&
                          readme.find("98.099") != std::string::npos;
  report(1, documented,
         "reference-only numbers documented in README, not reproduced");
}

void criterion_2_gradient_suite() {
  const auto t0 = Clock::now();
  SplitMix64 rng(90210);
  auto rand_t = [&rng](std::vector<std::int64_t> shape, double lo, double hi,
                       bool rg = true) {
    auto t = nn::Tensor::create(std::move(shape), rg);
    for (double& v : t->values) v = rng.next_range(lo, hi);
    return t;
  };
  auto reduce = [](const nn::TensorPtr& t) {
    SplitMix64 wrng(0xC0FFEE);
    auto w = nn::Tensor::create(t->shape);
    for (double& v : w->values) v = wrng.next_range(0.5, 1.5);
    return nn::sum_all(nn::mul_elem(t, w));
  };

  double worst = 0.0;
  std::string worst_op = "none";
  auto check = [&](const std::string& op, double err) {
    if (err > worst) {
      worst = err;
      worst_op = op;
    }
  };

  {
    auto x = rand_t({3, 5}, -1, 1), w = rand_t({5, 4}, -1, 1),
         b = rand_t({4}, -1, 1);
    check("dense", nn::grad_check(
                       [&](const std::vector<nn::TensorPtr>& in) {
                         return reduce(nn::dense(in[0], in[1], in[2]));
                       },
                       {x, w, b}));
  }
  {
    auto x = rand_t({2, 6, 5, 2}, -1, 1), k = rand_t({3, 3, 2, 3}, -1, 1),
         b = rand_t({3}, -1, 1);
    check("conv2d", nn::grad_check(
                        [&](const std::vector<nn::TensorPtr>& in) {
                          return reduce(nn::conv2d(in[0], in[1], in[2], 1,
                                                   nn::Padding::Same));
                        },
                        {x, k, b}));
  }
  {
    auto x = rand_t({6, 4}, -2, 2), g = rand_t({4}, 0.5, 1.5),
         b = rand_t({4}, -0.5, 0.5);
    check("batchnorm", nn::grad_check(
                           [&](const std::vector<nn::TensorPtr>& in) {
                             nn::BatchNormStats stats;
                             return reduce(nn::batchnorm(in[0], in[1], in[2],
                                                         stats, nn::Mode::Train));
                           },
                           {x, g, b}));
  }
  {
    auto x = rand_t({4, 6}, -1, 1);
    check("dropout_rate0",
          nn::grad_check(
              [&](const std::vector<nn::TensorPtr>& in) {
                return reduce(nn::dropout_mask(in[0], 0.0, nn::MaskKind::Dropout,
                                               nn::Mode::Train, 3));
              },
              {x}));
  }
  {
    auto x = rand_t({4, 6}, 0.2, 2.0);
    for (double& v : x->values)
      if (rng.next_unit() < 0.5) v = -v;
    check("relu", nn::grad_check(
                      [&](const std::vector<nn::TensorPtr>& in) {
                        return reduce(nn::relu(in[0]));
                      },
                      {x}));
  }
  {
    auto x = rand_t({4, 6}, -2, 2);
    check("swish", nn::grad_check(
                       [&](const std::vector<nn::TensorPtr>& in) {
                         return reduce(nn::swish(in[0]));
                       },
                       {x}));
  }
  {
    auto logits = rand_t({4, 5}, -2, 2);
    auto onehot = nn::Tensor::create({4, 5});
    for (int i = 0; i < 4; ++i) onehot->values[i * 5 + (2 * i) % 5] = 1.0;
    check("softmax_xent",
          nn::grad_check(
              [&](const std::vector<nn::TensorPtr>& in) {
                return nn::softmax_cross_entropy(in[0], onehot);
              },
              {logits}));
  }
  {
    auto pp = rand_t({3, 3}, -1, 1), qp = rand_t({3, 4}, -1, 1);
    auto pt = rand_t({3, 3}, -1, 1, false), qt = rand_t({3, 4}, 0.3, 1.0, false);
    check("pose_loss", nn::grad_check(
                           [&](const std::vector<nn::TensorPtr>& in) {
                             return nn::pose_loss(in[0], in[1], pt, qt, 1.5);
                           },
                           {pp, qp}));
  }
  {
    auto a = rand_t({3, 4}, -1, 1), b = rand_t({2, 5}, -1, 1);
    check("activity_penalty",
          nn::grad_check(
              [&](const std::vector<nn::TensorPtr>& in) {
                return nn::activity_penalty({in[0], in[1]}, 0.7);
              },
              {a, b}));
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "gradient suite: worst rel err %.3e (%s) < 1e-4, %.1f s < 60 s",
                worst, worst_op.c_str(), elapsed);
  report(2, worst < 1e-4 && elapsed < 60.0, detail);
}

void criterion_3_pose_loss_exactness() {
  bool ok = true;
  // perfect prediction
  auto pp = nn::Tensor::from_values({2, 3}, {1, 2, 3, -1, 0, 2});
  auto qp = nn::Tensor::from_values({2, 4}, {1, 0, 0, 0, 0.5, 0.5, 0.5, 0.5});
  ok &= std::abs(nn::pose_loss(pp, qp, pp, qp, 3.0)->values[0]) <= 1e-12;

  // ground-truth normalization: Q=(2,0,0,0) vs prediction (1,0,0,0)
  auto q2 = nn::Tensor::from_values({1, 4}, {2, 0, 0, 0});
  auto q1 = nn::Tensor::from_values({1, 4}, {1, 0, 0, 0});
  auto p0 = nn::Tensor::from_values({1, 3}, {0, 0, 0});
  ok &= std::abs(nn::pose_loss(p0, q1, p0, q2, 1.0)->values[0]) <= 1e-12;

  // affinity in beta from two evaluations
  SplitMix64 rng(31);
  auto rpp = nn::Tensor::create({5, 3});
  auto rpt = nn::Tensor::create({5, 3});
  auto rqp = nn::Tensor::create({5, 4});
  auto rqt = nn::Tensor::create({5, 4});
  for (auto& t : {rpp, rpt, rqp})
    for (double& v : t->values) v = rng.next_range(-1, 1);
  for (double& v : rqt->values) v = rng.next_range(0.2, 1.0);
  const double l1 = nn::pose_loss(rpp, rqp, rpt, rqt, 1.0)->values[0];
  const double l2 = nn::pose_loss(rpp, rqp, rpt, rqt, 2.0)->values[0];
  const double slope = l2 - l1, intercept = l1 - slope;
  ok &= slope >= 0.0;
  for (double beta : {0.25, 3.5, 10.0}) {
    const double direct = nn::pose_loss(rpp, rqp, rpt, rqt, beta)->values[0];
    ok &= std::abs(direct - (intercept + slope * beta)) <= 1e-10;
  }
  report(3, ok,
         "pose loss: zero at perfect prediction, affine in beta, "
         "ground-truth quaternion normalized");
}

void criterion_4_normalization_exactness() {
  bool ok = true;
  const NormalizationBounds b{{-2, 1, 0.25}, {7, 9, 3.75}};
  const Vec3 lo = normalize_position(b.min, b);
  const Vec3 hi = normalize_position(b.max, b);
  for (int a = 0; a < 3; ++a) {
    ok &= lo[a] == -1.0;
    ok &= hi[a] == 1.0;
  }
  SplitMix64 rng(47);
  const Vec3 ext = b.extent();
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{rng.next_range(-4, 9), rng.next_range(0, 11),
                 rng.next_range(-1, 5)};
    const Vec3 back = denormalize_position(normalize_position(p, b), b);
    for (int a = 0; a < 3; ++a)
      ok &= std::abs(back[a] - p[a]) <= 1e-12 * std::max(std::abs(p[a]), ext[a]);
  }
  report(4, ok, "coordinate map: endpoints exact, 1000-point round trip "
                "within 1e-12 relative");
}

nlohmann::json g_eval_a;  // desk run report, reused by criterion 11

void criterion_5_desk_run(double& elapsed_a, bool& ran_ok) {
  std::string log;
  elapsed_a = run_desk_pipeline("acceptance_out/run_a", log);
  ran_ok = elapsed_a >= 0.0;
  if (!ran_ok) {
    std::ofstream("acceptance_out/run_a.log") << log;
    report(5, false, "desk pipeline failed; see acceptance_out/run_a.log");
    return;
  }
  const std::string report_path = "acceptance_out/run_a/eval_report.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(report_path));
  } catch (...) {
    report(5, false, "could not parse " + report_path);
    ran_ok = false;
    return;
  }
  g_eval_a = j;

  const double accuracy = j.at("accuracy");
  bool pos_ok = true, quat_ok = true;
  double worst_axis = 0.0, worst_quat = 0.0;
  for (const auto& scene : j.at("per_scene")) {
    if (scene.at("routed").get<long>() == 0) {
      pos_ok = false;  // every scene must route at least one test sample
      continue;
    }
    for (int a = 0; a < 3; ++a) {
      // normalized units: 0.1 == 5% of the scene's per-axis extent
      const double mae_norm = scene.at("pos_mae_norm")[a];
      worst_axis = std::max(worst_axis, mae_norm);
      pos_ok &= mae_norm <= 0.1;
    }
    const double q = scene.at("quat_mae_deg");
    worst_quat = std::max(worst_quat, q);
    quat_ok &= q <= 10.0;
  }
  const bool time_ok = elapsed_a <= 1200.0;
  char detail[220];
  std::snprintf(detail, sizeof(detail),
                "desk run: accuracy %.4f >= 0.95, worst per-scene axis MAE "
                "%.4f <= 0.1 (norm, = 5%% extent), worst quat MAE %.2f deg "
                "<= 10, wall %.0f s <= 1200",
                accuracy, worst_axis, worst_quat, elapsed_a);
  report(5, accuracy >= 0.95 && pos_ok && quat_ok && time_ok, detail);
}

void criterion_6_composition_fidelity() {
  const RunResult r = run_cli("generate --config " + kFullConfig + " --dry-run");
  bool ok = r.exit_code == 0 &&
            r.output.find("total planned samples: 156949") != std::string::npos;
  // spot check straight from the table as well
  const CompositionTable table = CompositionTable::load_csv(
      std::string(ICPS_SOURCE_DIR) + "/data/compositions/fullscale.csv");
  ok &= table.grand_total() == 156949;
  ok &= table.get("Armoury", TrajectoryStyle::Seq1RectForward) == 1739;
  report(6, ok, "full-scale dry run plans 156949 samples; Armoury/seq1 = 1739");
}

void criterion_7_softmax_sanity() {
  auto logits = nn::Tensor::create({3, 9});
  auto onehot = nn::Tensor::create({3, 9});
  for (int i = 0; i < 3; ++i) onehot->values[i * 9 + 2 * i] = 1.0;
  const double loss = nn::softmax_cross_entropy(logits, onehot)->values[0];
  const double expect = 2.1972245773362196;  // ln 9
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "uniform 9-class cross entropy = %.12f (ln 9 within 1e-9)", loss);
  report(7, std::abs(loss - expect) <= 1e-9, detail);
}

void criterion_8_determinism(bool run_a_ok) {
  if (!run_a_ok) {
    report(8, false, "skipped: desk run A failed");
    return;
  }
  std::string log;
  const double elapsed = run_desk_pipeline("acceptance_out/run_b", log);
  if (elapsed < 0.0) {
    std::ofstream("acceptance_out/run_b.log") << log;
    report(8, false, "desk pipeline rerun failed; see acceptance_out/run_b.log");
    return;
  }
  std::vector<std::string> rel_paths = {"dataset/manifest.json",
                                        "classifier.ckpt",
                                        "classifier_curves.csv",
                                        "eval_report.json"};
  for (const auto& entry :
       fs::directory_iterator("acceptance_out/run_a/regressors"))
    rel_paths.push_back("regressors/" + entry.path().filename().string());

  bool ok = true;
  std::string first_diff;
  for (const auto& rel : rel_paths) {
    const std::string a = read_file("acceptance_out/run_a/" + rel);
    const std::string b = read_file("acceptance_out/run_b/" + rel);
    if (a.empty() || a != b) {
      ok = false;
      if (first_diff.empty()) first_diff = rel;
    }
  }
  report(8, ok,
         ok ? "two full desk runs produced byte-identical manifests, "
              "checkpoints and reports (" +
                  std::to_string(rel_paths.size()) + " files)"
            : "first differing file: " + first_diff);
}

void criterion_9_augmentation_safety() {
  SplitMix64 rng(61);
  bool ok = true;
  AugmentationPolicy policy;  // all three permitted ops enabled
  for (int trial = 0; trial < 50; ++trial) {
    ImageRGB img = ImageRGB::create(24, 18);
    for (auto& px : img.pixels)
      px = static_cast<std::uint8_t>(rng.next() % 256);
    Pose label;
    label.position = {rng.next_range(-5, 5), rng.next_range(-5, 5),
                      rng.next_range(0, 3)};
    label.orientation = quat_canonicalize(quat_normalize(
        {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian(),
         rng.next_gaussian()}));
    Pose before;
    std::memcpy(&before, &label, sizeof(Pose));

    const ImageRGB out = augment(img, policy, rng.next());
    ok &= out.width == img.width && out.height == img.height;
    ok &= std::memcmp(&before, &label, sizeof(Pose)) == 0;
  }
  // The policy type carries only the three permitted photometric ops;
  // augment() has no pose parameter, so labels are untouchable by
  // construction.
  report(9, ok, "augmentation leaves pose labels bit-identical and image "
                "dimensions unchanged; policy admits no geometric op");
}

void criterion_10_quaternion_metric() {
  bool ok = true;
  SplitMix64 rng(71);
  for (int i = 0; i < 500; ++i) {
    const QuaternionWPQR q = quat_normalize(
        {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian(),
         rng.next_gaussian()});
    const QuaternionWPQR nq{-q.w, -q.p, -q.q, -q.r};
    ok &= quat_angular_error_deg(q, nq) <= 1e-6;
    const QuaternionWPQR r = quat_normalize(
        {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian(),
         rng.next_gaussian()});
    ok &= std::abs(quat_angular_error_deg(q, r) -
                   quat_angular_error_deg(r, q)) <= 1e-6;
  }
  const double c = std::cos(M_PI / 4), s = std::sin(M_PI / 4);
  ok &= std::abs(quat_angular_error_deg({1, 0, 0, 0}, {c, 0, 0, s}) - 90.0) <=
        1e-6;
  report(10, ok, "angular error: double-cover invariant, symmetric, 90-degree "
                 "case exact within 1e-6 deg");
}

void criterion_11_confusion_bookkeeping(bool run_a_ok) {
  bool ok = true;
  std::string detail;

  // stubbed perfect model through the same bookkeeping path
  {
    DatasetManifest m;
    m.image_width = m.image_height = 8;
    SplitMix64 rng(81);
    for (int sc = 0; sc < 3; ++sc) {
      ManifestScene scene;
      scene.spec.id = sc;
      scene.spec.name = "S" + std::to_string(sc);
      scene.spec.bounds = {{0, 0, 0}, {8, 6, 3}};
      m.scenes.push_back(scene);
      for (int i = 0; i < 30; ++i) {
        ManifestSample s;
        s.scene_id = sc;
        s.index = i;
        s.image = "none";
        s.pose.position = {rng.next_range(0.5, 7.5), rng.next_range(0.5, 5.5),
                           rng.next_range(0.5, 2.5)};
        s.pose.orientation = {1, 0, 0, 0};
        m.samples.push_back(s);
      }
    }
    split_dataset(m, {0.6, 0.2, 0.2, 2});
    compute_class_bounds(m);
    std::vector<SamplePrediction> preds;
    for (const auto& s : m.samples) {
      if (s.split != "test") continue;
      SamplePrediction p;
      p.predicted_class = s.scene_id;
      p.has_pose = true;
      p.pose_m = s.pose;
      p.pos_norm = *s.norm_pos;
      preds.push_back(p);
    }
    const EvalReport r = summarize_predictions(m, preds);
    long trace = 0;
    for (int i = 0; i < 3; ++i) trace += r.confusion[i][i];
    ok &= trace == r.total && r.accuracy == 1.0 && r.misroute_count == 0;
    for (int a = 0; a < 3; ++a) ok &= r.pos_mae_m[a] == 0.0;
    detail = "perfect stub gives a diagonal matrix";
  }

  // real desk-run report: row sums and the accuracy identity
  if (run_a_ok && !g_eval_a.is_null()) {
    const auto confusion = g_eval_a.at("confusion");
    const DatasetManifest m =
        load_manifest("acceptance_out/run_a/dataset/manifest.json");
    std::vector<long> per_class(m.scenes.size(), 0);
    long total_test = 0;
    for (const auto& s : m.samples) {
      if (s.split != "test") continue;
      ++per_class[static_cast<std::size_t>(s.scene_id)];
      ++total_test;
    }
    long trace = 0, total = 0;
    for (std::size_t i = 0; i < per_class.size(); ++i) {
      long row = 0;
      for (std::size_t k = 0; k < per_class.size(); ++k) {
        row += confusion[i][k].get<long>();
        total += confusion[i][k].get<long>();
      }
      ok &= row == per_class[i];
      trace += confusion[i][i].get<long>();
    }
    ok &= total == total_test;
    const double acc = g_eval_a.at("accuracy");
    ok &= std::abs(acc - static_cast<double>(trace) / total) <= 1e-12;
    detail += "; desk-run rows match per-class test counts, accuracy = "
              "trace/total";
  } else {
    ok = false;
    detail += "; desk-run report unavailable";
  }
  report(11, ok, detail);
}

}  // namespace

int main() {
  fs::remove_all("acceptance_out");
  fs::create_directories("acceptance_out");

  criterion_1_reference_only();
  criterion_2_gradient_suite();
  criterion_3_pose_loss_exactness();
  criterion_4_normalization_exactness();

  double elapsed_a = -1.0;
  bool run_a_ok = false;
  criterion_5_desk_run(elapsed_a, run_a_ok);

  criterion_6_composition_fidelity();
  criterion_7_softmax_sanity();
  criterion_8_determinism(run_a_ok);
  criterion_9_augmentation_safety();
  criterion_10_quaternion_metric();
  criterion_11_confusion_bookkeeping(run_a_ok);

  if (g_failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
