#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "icps/checkpoint.hpp"
#include "icps/model.hpp"
#include "icps/nn/gradcheck.hpp"
#include "icps/rng.hpp"

using namespace icps;

namespace {

nn::TensorPtr random_input(std::int64_t n, int h, int w, std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto x = nn::Tensor::create({n, h, w, 3});
  for (double& v : x->values) v = rng.next_unit();
  return x;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

RegressorConfig tiny_regressor_config() {
  RegressorConfig cfg;
  cfg.input_h = cfg.input_w = 8;
  cfg.conv_filters = {4};
  cfg.dense_widths = {6};
  cfg.dropout_rate = 0.1;
  cfg.dropconnect_rate = 0.1;
  cfg.activity_lambda = 0.01;
  cfg.beta = 1.5;
  return cfg;
}

}  // namespace

TEST_CASE("classifier forward shape and probability rows") {
  ClassifierConfig cfg;  // desk defaults
  CnnModel model = build_classifier(cfg, 7);
  auto x = random_input(2, 32, 32, 1);
  auto out = model.forward(x, nn::Mode::Infer, 0).out;
  REQUIRE(out->shape == std::vector<std::int64_t>{2, 9});
  const auto probs = nn::softmax_values(*out);
  for (int i = 0; i < 2; ++i) {
    double s = 0;
    for (int c = 0; c < 9; ++c) s += probs[i * 9 + c];
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("same seed reproduces identical initial parameters") {
  ClassifierConfig cfg;
  CnnModel a = build_classifier(cfg, 1234);
  CnnModel b = build_classifier(cfg, 1234);
  CnnModel c = build_classifier(cfg, 1235);
  const auto pa = a.named_params(), pb = b.named_params(), pc = c.named_params();
  REQUIRE(pa.size() == pb.size());
  bool all_equal = true, any_diff_c = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].second->values != pb[i].second->values) all_equal = false;
    if (pa[i].second->values != pc[i].second->values) any_diff_c = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_c);
}

TEST_CASE("desk classifier has more parameters than the desk regressor") {
  const CnnModel clf = build_classifier(ClassifierConfig{}, 1);
  const CnnModel reg = build_regressor(RegressorConfig{}, 1);
  CHECK(clf.parameter_count() > reg.parameter_count());
}

TEST_CASE("regressor emits seven finite outputs") {
  CnnModel model = build_regressor(RegressorConfig{}, 99);
  auto x = random_input(3, 32, 32, 2);
  auto out = model.forward(x, nn::Mode::Infer, 0).out;
  REQUIRE(out->shape == std::vector<std::int64_t>{3, 7});
  for (double v : out->values) CHECK(std::isfinite(v));
}

TEST_CASE("forward is deterministic in infer mode") {
  CnnModel model = build_regressor(RegressorConfig{}, 3);
  auto x = random_input(2, 32, 32, 5);
  auto a = model.forward(x, nn::Mode::Infer, 11).out;
  auto b = model.forward(x, nn::Mode::Infer, 99).out;  // seed ignored
  CHECK(a->values == b->values);
}

TEST_CASE("pose loss gradients flow through the whole tiny regressor") {
  CnnModel model = build_regressor(tiny_regressor_config(), 17);
  auto x = random_input(2, 8, 8, 3);
  SplitMix64 rng(4);
  auto pos = nn::Tensor::create({2, 3});
  auto quat = nn::Tensor::create({2, 4});
  for (double& v : pos->values) v = rng.next_range(-1, 1);
  for (double& v : quat->values) v = rng.next_range(0.2, 1.0);

  // Probe every parameter except conv biases: train-mode batch norm
  // cancels constant channel shifts, so their true gradient is exactly
  // zero and finite differences would only measure noise there.
  std::vector<nn::TensorPtr> probed;
  for (const auto& [name, t] : model.named_params())
    if (name.find("conv") != 0 || name.find(".bias") == std::string::npos)
      probed.push_back(t);
  const double err = nn::grad_check(
      [&](const std::vector<nn::TensorPtr>&) {
        auto fwd = model.forward(x, nn::Mode::Train, 42);
        auto loss = nn::pose_loss(nn::slice_cols(fwd.out, 0, 3),
                                  nn::slice_cols(fwd.out, 3, 4), pos, quat,
                                  model.beta);
        return nn::add(loss, nn::activity_penalty(fwd.hidden_activations,
                                                  model.activity_lambda));
      },
      probed);
  CHECK(err < 1e-4);
}

TEST_CASE("invalid model configs are rejected") {
  ClassifierConfig cfg;
  cfg.num_classes = 1;
  CHECK_THROWS_AS(build_classifier(cfg, 1), InvalidConfig);
  cfg = ClassifierConfig{};
  cfg.conv_filters.clear();
  CHECK_THROWS_AS(build_classifier(cfg, 1), InvalidConfig);
  cfg = ClassifierConfig{};
  cfg.conv_filters = {8, 8, 8, 8, 8, 8};  // pools below 1x1
  CHECK_THROWS_AS(build_classifier(cfg, 1), InvalidConfig);
  RegressorConfig rcfg;
  rcfg.beta = 0.0;
  CHECK_THROWS_AS(build_regressor(rcfg, 1), InvalidConfig);
}

TEST_CASE("checkpoint round trip") {
  const std::string dir = "ckpt_tmp";
  std::filesystem::create_directories(dir);

  RegressorConfig cfg = tiny_regressor_config();
  CnnModel model = build_regressor(cfg, 21);
  CheckpointMeta meta;
  meta.scene_id = 4;
  meta.scene_name = "Serving";
  meta.norm_bounds = NormalizationBounds{{1, 2, 0.5}, {7, 5, 2.5}};

  const std::string p1 = dir + "/a.ckpt";
  const std::string p2 = dir + "/b.ckpt";
  save_checkpoint(model, meta, p1);

  SUBCASE("save, load, save is byte identical") {
    LoadedModel loaded = load_checkpoint(p1);
    save_checkpoint(loaded.model, loaded.meta, p2);
    CHECK(read_file(p1) == read_file(p2));
    CHECK(loaded.meta.scene_id == 4);
    CHECK(loaded.meta.scene_name == "Serving");
    CHECK(loaded.meta.norm_bounds->max.y == 5.0);
  }

  SUBCASE("round trip preserves inference output bitwise") {
    auto x = random_input(2, 8, 8, 9);
    const auto before = model.forward(x, nn::Mode::Infer, 0).out->values;
    LoadedModel loaded = load_checkpoint(p1, ModelKind::Regressor);
    const auto after = loaded.model.forward(x, nn::Mode::Infer, 0).out->values;
    CHECK(before == after);
  }

  SUBCASE("kind-checked load rejects the wrong kind") {
    CHECK_THROWS_AS(load_checkpoint(p1, ModelKind::Classifier),
                    ModelKindMismatch);
  }

  SUBCASE("truncated files are corrupt") {
    const std::string full = read_file(p1);
    std::ofstream out(p2, std::ios::binary);
    out.write(full.data(), static_cast<std::streamsize>(full.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(p2), CorruptCheckpoint);
  }

  SUBCASE("bad magic and bad version are distinct failures") {
    std::string bytes = read_file(p1);
    std::string magic_broken = bytes;
    magic_broken[0] = 'X';
    std::ofstream(p2, std::ios::binary).write(magic_broken.data(),
                                              magic_broken.size());
    CHECK_THROWS_AS(load_checkpoint(p2), CorruptCheckpoint);

    std::string version_broken = bytes;
    version_broken[4] = 9;  // version field, little endian
    std::ofstream(p2, std::ios::binary).write(version_broken.data(),
                                              version_broken.size());
    CHECK_THROWS_AS(load_checkpoint(p2), VersionMismatch);
  }

  SUBCASE("classifier checkpoints carry the scene-name table") {
    ClassifierConfig ccfg;
    ccfg.input_h = ccfg.input_w = 8;
    ccfg.conv_filters = {4};
    ccfg.dense_widths = {6};
    ccfg.num_classes = 3;
    CnnModel clf = build_classifier(ccfg, 5);
    CheckpointMeta cmeta;
    cmeta.scene_names = {"A", "B", "C"};
    save_checkpoint(clf, cmeta, p2);
    LoadedModel loaded = load_checkpoint(p2, ModelKind::Classifier);
    CHECK(loaded.meta.scene_names == std::vector<std::string>{"A", "B", "C"});
  }
}
