#include "icps/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "icps/rng.hpp"

namespace icps {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw InvalidConfig("unknown key '" + key + "' in " + context);
}

double get_num(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidConfig("config is not valid JSON: " + std::string(e.what()));
  }

  check_keys(j,
             {"seed", "output_dir", "scenes", "composition", "trajectory",
              "render", "split", "classifier", "regressor", "training",
              "augmentation"},
             "config root");

  RunConfig cfg;
  try {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.output_dir = j.at("output_dir").get<std::string>();

    for (const auto& js : j.at("scenes")) {
      check_keys(js, {"name", "bounds_min", "bounds_max", "appearance_seed"},
                 "scene entry");
      SceneSpec s;
      s.id = static_cast<int>(cfg.scenes.size());
      s.name = js.at("name").get<std::string>();
      s.bounds.min = {js.at("bounds_min")[0], js.at("bounds_min")[1],
                      js.at("bounds_min")[2]};
      s.bounds.max = {js.at("bounds_max")[0], js.at("bounds_max")[1],
                      js.at("bounds_max")[2]};
      s.bounds.validate();
      s.appearance_seed =
          js.contains("appearance_seed")
              ? js.at("appearance_seed").get<std::uint64_t>()
              : derive_seed(cfg.seed, 0x7363656eULL,  // "scen"
                            static_cast<std::uint64_t>(s.id));
      for (const auto& other : cfg.scenes)
        if (other.name == s.name)
          throw InvalidConfig("duplicate scene name: " + s.name);
      cfg.scenes.push_back(std::move(s));
    }
    if (cfg.scenes.size() < 2) throw InvalidConfig("need at least 2 scenes");

    const auto& jc = j.at("composition");
    check_keys(jc, {"csv"}, "composition");
    const fs::path csv = fs::path(path).parent_path() / jc.at("csv").get<std::string>();
    if (!fs::exists(csv))
      throw InvalidConfig("composition CSV does not exist: " + csv.string());
    cfg.composition_csv = csv.string();

    const auto& jt = j.at("trajectory");
    check_keys(jt, {"wall_margin", "camera_height_fraction"}, "trajectory");
    cfg.trajectory.wall_margin = jt.at("wall_margin");
    cfg.trajectory.camera_height_fraction = jt.at("camera_height_fraction");

    const auto& jr = j.at("render");
    check_keys(jr, {"width", "height", "hfov_deg"}, "render");
    cfg.render.width = jr.at("width");
    cfg.render.height = jr.at("height");
    cfg.render.intrinsics.hfov_deg = jr.at("hfov_deg");

    const auto& jsp = j.at("split");
    check_keys(jsp, {"train", "val", "test"}, "split");
    cfg.split.train = jsp.at("train");
    cfg.split.val = jsp.at("val");
    cfg.split.test = jsp.at("test");
    cfg.split.validate();

    const auto& jcl = j.at("classifier");
    check_keys(jcl, {"conv_filters", "dense_widths", "dropout", "batchnorm"},
               "classifier");
    cfg.classifier.input_h = cfg.render.height;
    cfg.classifier.input_w = cfg.render.width;
    cfg.classifier.num_classes = static_cast<int>(cfg.scenes.size());
    cfg.classifier.conv_filters = jcl.at("conv_filters").get<std::vector<int>>();
    cfg.classifier.dense_widths = jcl.at("dense_widths").get<std::vector<int>>();
    cfg.classifier.dropout_rate = jcl.at("dropout");
    cfg.classifier.batchnorm = jcl.at("batchnorm");
    cfg.classifier.validate();

    const auto& jrg = j.at("regressor");
    check_keys(jrg,
               {"conv_filters", "dense_widths", "dropout", "dropconnect",
                "activity_lambda", "beta", "batchnorm"},
               "regressor");
    cfg.regressor.input_h = cfg.render.height;
    cfg.regressor.input_w = cfg.render.width;
    cfg.regressor.conv_filters = jrg.at("conv_filters").get<std::vector<int>>();
    cfg.regressor.dense_widths = jrg.at("dense_widths").get<std::vector<int>>();
    cfg.regressor.dropout_rate = jrg.at("dropout");
    cfg.regressor.dropconnect_rate = jrg.at("dropconnect");
    cfg.regressor.activity_lambda = jrg.at("activity_lambda");
    cfg.regressor.beta = jrg.at("beta");
    cfg.regressor.batchnorm = jrg.at("batchnorm");
    cfg.regressor.validate();

    const auto& jtr = j.at("training");
    check_keys(jtr,
               {"batch_size", "classifier_epochs", "regressor_epochs", "lr",
                "adam_beta1", "adam_beta2", "adam_eps", "early_stop_patience",
                "augment_classifier", "augment_regressor", "regressor_lr"},
               "training");
    TrainSettings base;
    base.batch_size = jtr.at("batch_size");
    base.lr = jtr.at("lr");
    base.adam_beta1 = get_num(jtr, "adam_beta1", 0.9);
    base.adam_beta2 = get_num(jtr, "adam_beta2", 0.999);
    base.adam_eps = get_num(jtr, "adam_eps", 1e-8);
    base.early_stop_patience =
        jtr.contains("early_stop_patience") ? jtr.at("early_stop_patience").get<int>() : 0;
    if (base.batch_size < 2) throw InvalidConfig("batch_size must be >= 2");

    AugmentationPolicy aug;
    if (j.contains("augmentation")) {
      const auto& ja = j.at("augmentation");
      check_keys(ja,
                 {"noise_sigma", "brightness_range", "channel_shift_range",
                  "enable_noise", "enable_brightness", "enable_channel_shift"},
                 "augmentation");
      aug.noise_sigma = get_num(ja, "noise_sigma", aug.noise_sigma);
      if (ja.contains("brightness_range")) {
        aug.brightness_min = ja.at("brightness_range")[0];
        aug.brightness_max = ja.at("brightness_range")[1];
      }
      if (ja.contains("channel_shift_range")) {
        aug.channel_shift_min = ja.at("channel_shift_range")[0];
        aug.channel_shift_max = ja.at("channel_shift_range")[1];
      }
      if (ja.contains("enable_noise")) aug.enable_noise = ja.at("enable_noise");
      if (ja.contains("enable_brightness"))
        aug.enable_brightness = ja.at("enable_brightness");
      if (ja.contains("enable_channel_shift"))
        aug.enable_channel_shift = ja.at("enable_channel_shift");
    }

    cfg.classifier_train = base;
    cfg.classifier_train.epochs = jtr.at("classifier_epochs");
    cfg.classifier_train.augment =
        jtr.contains("augment_classifier") ? jtr.at("augment_classifier").get<bool>() : true;
    cfg.classifier_train.augmentation = aug;

    cfg.regressor_train = base;
    cfg.regressor_train.epochs = jtr.at("regressor_epochs");
    if (jtr.contains("regressor_lr"))
      cfg.regressor_train.lr = jtr.at("regressor_lr").get<double>();
    cfg.regressor_train.augment =
        jtr.contains("augment_regressor") ? jtr.at("augment_regressor").get<bool>() : false;
    cfg.regressor_train.augmentation = aug;
  } catch (const json::exception& e) {
    throw InvalidConfig("config is missing or mistypes a field: " +
                        std::string(e.what()));
  }
  return cfg;
}

std::uint64_t seed_for_generation(const RunConfig& cfg) {
  return derive_seed(cfg.seed, 0x67656e21ULL);  // "gen!"
}
std::uint64_t seed_for_split(const RunConfig& cfg) {
  return derive_seed(cfg.seed, 0x73706c74ULL);  // "splt"
}
std::uint64_t seed_for_classifier(const RunConfig& cfg) {
  return derive_seed(cfg.seed, 0x636c6673ULL);  // "clfs"
}
std::uint64_t seed_for_regressor(const RunConfig& cfg, int scene_id) {
  return derive_seed(cfg.seed, 0x72656772ULL,  // "regr"
                     static_cast<std::uint64_t>(scene_id));
}

}  // namespace icps
