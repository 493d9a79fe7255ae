// Command-line surface for the indoor camera positioning pipeline:
// dataset generation, splitting, training, tandem inference, evaluation
// and the gradient self-check. Exit codes: 0 success, 2 usage/config
// error, 3 missing-model error, 1 internal failure.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icps/checkpoint.hpp"
#include "icps/config.hpp"
#include "icps/nn/adam.hpp"
#include "icps/nn/gradcheck.hpp"
#include "icps/nn/ops.hpp"
#include "icps/pipeline/dataset.hpp"
#include "icps/pipeline/evaluate.hpp"
#include "icps/pipeline/manifest.hpp"
#include "icps/pipeline/train.hpp"
#include "icps/rng.hpp"
#include "icps/threads.hpp"

namespace fs = std::filesystem;
using namespace icps;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  int threads = 1;
  std::string out_override;
};

RunConfig load_config(const GlobalOpts& g) {
  RunConfig cfg = load_run_config(g.config_path);
  if (g.has_seed_override) cfg.seed = g.seed_override;
  if (!g.out_override.empty()) cfg.output_dir = g.out_override;
  return cfg;
}

void print_composition(const RunConfig& cfg, const CompositionTable& table) {
  std::printf("%-16s", "scene");
  for (int s = 0; s < kNumTrajectoryStyles; ++s)
    std::printf("%8s", trajectory_style_name(static_cast<TrajectoryStyle>(s)));
  std::printf("%10s\n", "total");
  for (const auto& name : table.scene_names()) {
    std::printf("%-16s", name.c_str());
    for (int s = 0; s < kNumTrajectoryStyles; ++s)
      std::printf("%8ld", table.get(name, static_cast<TrajectoryStyle>(s)));
    std::printf("%10ld\n", table.scene_total(name));
  }
  std::printf("%-16s", "total");
  for (int s = 0; s < kNumTrajectoryStyles; ++s)
    std::printf("%8ld", table.style_total(static_cast<TrajectoryStyle>(s)));
  std::printf("%10ld\n", table.grand_total());
  std::printf("total planned samples: %ld\n", table.grand_total());
}

int cmd_generate(const GlobalOpts& g, bool dry_run) {
  const RunConfig cfg = load_config(g);
  const CompositionTable table = CompositionTable::load_csv(cfg.composition_csv);
  print_composition(cfg, table);
  if (dry_run) return 0;

  TrajectoryConfig traj = cfg.trajectory;
  traj.seed = seed_for_generation(cfg);
  const std::string dataset_dir = (fs::path(cfg.output_dir) / "dataset").string();
  const DatasetManifest m =
      build_dataset(cfg.scenes, table, traj, cfg.render, dataset_dir);
  std::printf("wrote %zu samples\n", m.samples.size());
  std::printf("manifest: %s\n",
              (fs::path(dataset_dir) / "manifest.json").string().c_str());
  return 0;
}

void do_split(const RunConfig& cfg, DatasetManifest& m,
              const std::string& manifest_path) {
  SplitSpec spec = cfg.split;
  spec.seed = seed_for_split(cfg);
  split_dataset(m, spec);
  compute_class_bounds(m);
  save_manifest(m, manifest_path);
}

int cmd_split(const GlobalOpts& g, const std::string& manifest_path) {
  const RunConfig cfg = load_config(g);
  DatasetManifest m = load_manifest(manifest_path);
  do_split(cfg, m, manifest_path);
  for (const auto& scene : m.scenes) {
    long tr = 0, va = 0, te = 0;
    for (const auto& s : m.samples) {
      if (s.scene_id != scene.spec.id) continue;
      if (s.split == "train") ++tr;
      if (s.split == "val") ++va;
      if (s.split == "test") ++te;
    }
    std::printf("%-16s train %ld  val %ld  test %ld\n", scene.spec.name.c_str(),
                tr, va, te);
  }
  return 0;
}

// Written to a temp path first so a failed run never leaves a partial
// checkpoint behind.
void save_checkpoint_atomic(const CnnModel& model, const CheckpointMeta& meta,
                            const std::string& path) {
  const std::string tmp = path + ".tmp";
  save_checkpoint(model, meta, tmp);
  fs::rename(tmp, path);
}

int cmd_train_classifier(const GlobalOpts& g, const std::string& manifest_path,
                         bool split_first) {
  const RunConfig cfg = load_config(g);
  DatasetManifest m = load_manifest(manifest_path);
  if (!m.has_split()) {
    if (!split_first)
      throw InvalidConfig("manifest has no split; rerun with --split");
    do_split(cfg, m, manifest_path);
  }
  ImageStore images(fs::path(manifest_path).parent_path().string());

  CnnModel model = build_classifier(cfg.classifier, seed_for_classifier(cfg));
  TrainSettings ts = cfg.classifier_train;
  ts.seed = seed_for_classifier(cfg);
  const TrainReport report = train_classifier_model(model, m, images, ts);

  fs::create_directories(cfg.output_dir);
  CheckpointMeta meta;
  for (const auto& s : m.scenes) meta.scene_names.push_back(s.spec.name);
  const std::string ckpt = (fs::path(cfg.output_dir) / "classifier.ckpt").string();
  save_checkpoint_atomic(model, meta, ckpt);
  write_curves_csv(report,
                   (fs::path(cfg.output_dir) / "classifier_curves.csv").string());
  std::printf("epoch 1 train loss: %.9g\n", report.rows.front().train_loss);
  std::printf("best val accuracy: %.6f (epoch %d)\n", report.best_val_metric,
              report.best_epoch);
  std::printf("checkpoint: %s\n", ckpt.c_str());
  return 0;
}

int cmd_train_regressor(const GlobalOpts& g, const std::string& manifest_path,
                        const std::string& scene_filter, bool split_first) {
  const RunConfig cfg = load_config(g);
  DatasetManifest m = load_manifest(manifest_path);
  if (!m.has_split()) {
    if (!split_first)
      throw InvalidConfig("manifest has no split; rerun with --split");
    do_split(cfg, m, manifest_path);
  }
  ImageStore images(fs::path(manifest_path).parent_path().string());
  const std::string reg_dir = (fs::path(cfg.output_dir) / "regressors").string();
  fs::create_directories(reg_dir);

  bool matched = false;
  for (const auto& scene : m.scenes) {
    if (!scene_filter.empty() && scene.spec.name != scene_filter) continue;
    matched = true;
    if (!scene.norm_bounds)
      throw InvalidConfig("manifest lacks normalization bounds; rerun split");
    CnnModel model =
        build_regressor(cfg.regressor, seed_for_regressor(cfg, scene.spec.id));
    TrainSettings ts = cfg.regressor_train;
    ts.seed = seed_for_regressor(cfg, scene.spec.id);
    const TrainReport report =
        train_regressor_model(model, m, images, scene.spec.id, ts);

    CheckpointMeta meta;
    meta.scene_id = scene.spec.id;
    meta.scene_name = scene.spec.name;
    meta.norm_bounds = scene.norm_bounds;
    const std::string base = sanitize_name(scene.spec.name);
    save_checkpoint_atomic(model, meta,
                           (fs::path(reg_dir) / (base + ".ckpt")).string());
    write_curves_csv(report,
                     (fs::path(reg_dir) / (base + "_curves.csv")).string());
    std::printf("%-16s epoch 1 train loss %.9g  best val loss %.9g (epoch %d)\n",
                scene.spec.name.c_str(), report.rows.front().train_loss,
                report.best_val_metric, report.best_epoch);
  }
  if (!matched) throw UnknownScene("no scene named '" + scene_filter + "'");
  std::printf("regressors: %s\n", reg_dir.c_str());
  return 0;
}

RegressorRegistry load_registry(const std::string& dir) {
  RegressorRegistry registry;
  if (!fs::is_directory(dir)) throw IoFailure("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".ckpt") paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    LoadedModel lm = load_checkpoint(p, ModelKind::Regressor);
    if (!lm.meta.norm_bounds)
      throw CorruptCheckpoint("regressor checkpoint lacks bounds: " + p);
    registry.add(lm.meta.scene_id, std::move(lm.model), *lm.meta.norm_bounds);
  }
  return registry;
}

int cmd_infer(const std::string& classifier_path, const std::string& reg_dir,
              const std::string& image_path, bool as_json) {
  LoadedModel clf = load_checkpoint(classifier_path, ModelKind::Classifier);
  RegressorRegistry registry = load_registry(reg_dir);
  const ImageRGB image = read_ppm(image_path);

  const TandemResult r = tandem_infer(image, clf.model, registry);
  const std::string scene_name =
      r.scene_id < static_cast<int>(clf.meta.scene_names.size())
          ? clf.meta.scene_names[r.scene_id]
          : std::to_string(r.scene_id);
  if (as_json) {
    nlohmann::ordered_json j;
    j["scene_id"] = r.scene_id;
    j["scene_name"] = scene_name;
    j["probabilities"] = r.probabilities;
    j["position_m"] = {r.pose.position.x, r.pose.position.y, r.pose.position.z};
    j["quaternion_wpqr"] = {r.pose.orientation.w, r.pose.orientation.p,
                            r.pose.orientation.q, r.pose.orientation.r};
    std::cout << j.dump(1) << "\n";
  } else {
    std::printf("scene: %s (id %d)\n", scene_name.c_str(), r.scene_id);
    std::printf("probabilities:");
    for (double p : r.probabilities) std::printf(" %.4f", p);
    std::printf("\nposition (m): %.6f %.6f %.6f\n", r.pose.position.x,
                r.pose.position.y, r.pose.position.z);
    std::printf("quaternion (wpqr): %.6f %.6f %.6f %.6f\n",
                r.pose.orientation.w, r.pose.orientation.p,
                r.pose.orientation.q, r.pose.orientation.r);
  }
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& manifest_path,
                 const std::string& classifier_path,
                 const std::string& reg_dir) {
  const RunConfig cfg = load_config(g);
  DatasetManifest m = load_manifest(manifest_path);
  if (!m.has_split()) throw InvalidConfig("manifest has no split");
  ImageStore images(fs::path(manifest_path).parent_path().string());
  LoadedModel clf = load_checkpoint(classifier_path, ModelKind::Classifier);
  RegressorRegistry registry = load_registry(reg_dir);

  const EvalReport r = evaluate_tandem(m, images, clf.model, registry);
  fs::create_directories(cfg.output_dir);
  const std::string report_path =
      (fs::path(cfg.output_dir) / "eval_report.json").string();
  write_eval_report_json(r, report_path);

  std::printf("test samples: %ld\n", r.total);
  std::printf("classifier accuracy: %.6f\n", r.accuracy);
  std::printf("misroutes: %ld\n", r.misroute_count);
  std::printf("position MAE (m):   %.6f %.6f %.6f\n", r.pos_mae_m[0],
              r.pos_mae_m[1], r.pos_mae_m[2]);
  std::printf("position MAE (norm): %.6f %.6f %.6f\n", r.pos_mae_norm[0],
              r.pos_mae_norm[1], r.pos_mae_norm[2]);
  std::printf("quaternion MAE (deg): %.6f\n", r.quat_mae_deg);
  std::printf("report: %s\n", report_path.c_str());
  return 0;
}

int cmd_gradcheck(const std::string& sabotage_op) {
  nn::set_sabotage(sabotage_op);
  SplitMix64 rng(20240501);
  auto random_tensor = [&rng](std::vector<std::int64_t> shape, double lo,
                              double hi, bool rg = true) {
    auto t = nn::Tensor::create(std::move(shape), rg);
    for (double& v : t->values) v = rng.next_range(lo, hi);
    return t;
  };

  struct Row {
    std::string name;
    double err;
  };
  std::vector<Row> rows;
  auto run = [&rows](const std::string& name, const nn::GraphFn& f,
                     const std::vector<nn::TensorPtr>& inputs) {
    rows.push_back({name, nn::grad_check(f, inputs)});
  };

  // Fixed-weight linear functional of the op output; weights away from
  // zero keep finite-difference noise small relative to every gradient.
  auto reduce = [](const nn::TensorPtr& t) {
    SplitMix64 wrng(0xC0FFEE);
    auto w = nn::Tensor::create(t->shape);
    for (double& v : w->values) v = wrng.next_range(0.5, 1.5);
    return nn::sum_all(nn::mul_elem(t, w));
  };

  {
    auto x = random_tensor({3, 5}, -1, 1);
    auto w = random_tensor({5, 4}, -1, 1);
    auto b = random_tensor({4}, -1, 1);
    run("dense",
        [&](const std::vector<nn::TensorPtr>& in) {
          return reduce(nn::dense(in[0], in[1], in[2]));
        },
        {x, w, b});
  }
  {
    auto x = random_tensor({2, 6, 5, 2}, -1, 1);
    auto k = random_tensor({3, 3, 2, 3}, -1, 1);
    auto b = random_tensor({3}, -1, 1);
    run("conv2d",
        [&](const std::vector<nn::TensorPtr>& in) {
          return reduce(nn::conv2d(in[0], in[1], in[2], 1, nn::Padding::Same));
        },
        {x, k, b});
  }
  {
    auto x = random_tensor({6, 4}, -2, 2);
    auto gamma = random_tensor({4}, 0.5, 1.5);
    auto beta = random_tensor({4}, -0.5, 0.5);
    run("batchnorm",
        [&](const std::vector<nn::TensorPtr>& in) {
          nn::BatchNormStats stats;
          return reduce(
              nn::batchnorm(in[0], in[1], in[2], stats, nn::Mode::Train));
        },
        {x, gamma, beta});
  }
  {
    auto x = random_tensor({4, 6}, -1, 1);
    run("dropout_rate0",
        [&](const std::vector<nn::TensorPtr>& in) {
          return reduce(nn::dropout_mask(in[0], 0.0, nn::MaskKind::Dropout,
                                         nn::Mode::Train, 7));
        },
        {x});
  }
  {
    auto x = random_tensor({4, 6}, 0.2, 2.0);  // away from the relu kink
    run("relu",
        [&](const std::vector<nn::TensorPtr>& in) {
          return reduce(nn::relu(in[0]));
        },
        {x});
  }
  {
    auto x = random_tensor({4, 6}, -2, 2);
    run("swish",
        [&](const std::vector<nn::TensorPtr>& in) {
          return reduce(nn::swish(in[0]));
        },
        {x});
  }
  {
    auto logits = random_tensor({4, 5}, -2, 2);
    auto onehot = nn::Tensor::create({4, 5});
    for (int i = 0; i < 4; ++i)
      onehot->values[i * 5 + (i * 2) % 5] = 1.0;
    run("softmax_xent",
        [&](const std::vector<nn::TensorPtr>& in) {
          return nn::softmax_cross_entropy(in[0], onehot);
        },
        {logits});
  }
  {
    auto pp = random_tensor({3, 3}, -1, 1);
    auto qp = random_tensor({3, 4}, -1, 1);
    auto pt = random_tensor({3, 3}, -1, 1, false);
    auto qt = random_tensor({3, 4}, 0.3, 1.0, false);
    run("pose_loss",
        [&](const std::vector<nn::TensorPtr>& in) {
          return nn::pose_loss(in[0], in[1], pt, qt, 1.5);
        },
        {pp, qp});
  }
  {
    auto a = random_tensor({3, 4}, -1, 1);
    auto b2 = random_tensor({2, 5}, -1, 1);
    run("activity_penalty",
        [&](const std::vector<nn::TensorPtr>& in) {
          return nn::activity_penalty({in[0], in[1]}, 0.7);
        },
        {a, b2});
  }
  {
    // conv -> batchnorm -> swish -> dense -> softmax-xent, end to end.
    // The conv bias is excluded from probing: train-mode batch norm
    // cancels any constant channel shift, so its true gradient is
    // exactly zero and the check would only measure difference noise.
    auto x = random_tensor({2, 4, 4, 2}, -1, 1);
    auto k = random_tensor({3, 3, 2, 3}, -1, 1);
    auto kb = random_tensor({3}, -0.2, 0.2, false);
    auto gamma = random_tensor({3}, 0.5, 1.5);
    auto beta = random_tensor({3}, -0.5, 0.5);
    auto w = random_tensor({3, 4}, -1, 1);
    auto b = random_tensor({4}, -0.2, 0.2);
    auto onehot = nn::Tensor::create({2, 4});
    onehot->values[0 * 4 + 1] = 1.0;
    onehot->values[1 * 4 + 3] = 1.0;
    run("composed_stack",
        [&](const std::vector<nn::TensorPtr>& in) {
          nn::BatchNormStats stats;
          auto t = nn::conv2d(in[0], in[1], in[2], 1, nn::Padding::Same);
          t = nn::batchnorm(t, in[3], in[4], stats, nn::Mode::Train);
          t = nn::swish(t);
          t = nn::global_avg_pool(t);
          t = nn::dense(t, in[5], in[6]);
          return nn::softmax_cross_entropy(t, onehot);
        },
        {x, k, kb, gamma, beta, w, b});
  }

  bool all_pass = true;
  std::printf("%-18s %14s  %s\n", "op", "max_rel_err", "result");
  for (const auto& row : rows) {
    const bool pass = row.err < 1e-4;
    all_pass = all_pass && pass;
    std::printf("%-18s %14.3e  %s\n", row.name.c_str(), row.err,
                pass ? "PASS" : "FAIL");
  }
  nn::set_sabotage("");
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"indoor camera positioning pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  bool dry_run = false, as_json = false, split_first = false;
  std::string manifest_path, scene_filter, classifier_path, reg_dir, image_path;
  std::string sabotage_op;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", g.config_path, "run config JSON");
    if (needs_config) opt->required();
    cmd->add_option("--seed", g.seed_override, "override the config seed")
        ->each([&](const std::string&) { g.has_seed_override = true; });
    cmd->add_option("--threads", g.threads, "kernel thread count (default 1)");
    cmd->add_option("--out", g.out_override, "override the output directory");
  };

  auto* c_gen = app.add_subcommand("generate", "render the dataset");
  add_common(c_gen, true);
  c_gen->add_flag("--dry-run", dry_run, "print planned counts only");

  auto* c_split = app.add_subcommand("split", "assign train/val/test tags");
  add_common(c_split, true);
  c_split->add_option("--manifest", manifest_path, "dataset manifest")->required();

  auto* c_tc = app.add_subcommand("train-classifier", "train the scene classifier");
  add_common(c_tc, true);
  c_tc->add_option("--manifest", manifest_path)->required();
  c_tc->add_flag("--split", split_first, "split the manifest first if untagged");

  auto* c_tr = app.add_subcommand("train-regressor", "train per-scene regressors");
  add_common(c_tr, true);
  c_tr->add_option("--manifest", manifest_path)->required();
  c_tr->add_option("--scene", scene_filter, "train only this scene");
  c_tr->add_flag("--split", split_first);

  auto* c_inf = app.add_subcommand("infer", "tandem inference on one image");
  c_inf->add_option("--classifier", classifier_path)->required();
  c_inf->add_option("--regressors", reg_dir)->required();
  c_inf->add_option("--image", image_path)->required();
  c_inf->add_flag("--json", as_json);
  c_inf->add_option("--threads", g.threads);

  auto* c_eval = app.add_subcommand("evaluate", "evaluate on the test split");
  add_common(c_eval, true);
  c_eval->add_option("--manifest", manifest_path)->required();
  c_eval->add_option("--classifier", classifier_path)->required();
  c_eval->add_option("--regressors", reg_dir)->required();

  auto* c_gc = app.add_subcommand("gradcheck", "finite-difference self check");
  c_gc->add_option("--sabotage", sabotage_op,
                   "deliberately break one op's backward (test hook)");
  c_gc->add_option("--threads", g.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  set_max_threads(g.threads);
  try {
    if (c_gen->parsed()) return cmd_generate(g, dry_run);
    if (c_split->parsed()) return cmd_split(g, manifest_path);
    if (c_tc->parsed()) return cmd_train_classifier(g, manifest_path, split_first);
    if (c_tr->parsed())
      return cmd_train_regressor(g, manifest_path, scene_filter, split_first);
    if (c_inf->parsed())
      return cmd_infer(classifier_path, reg_dir, image_path, as_json);
    if (c_eval->parsed())
      return cmd_evaluate(g, manifest_path, classifier_path, reg_dir);
    if (c_gc->parsed()) return cmd_gradcheck(sabotage_op);
  } catch (const MissingRegressor& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownScene& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CorruptCheckpoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const VersionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelKindMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
