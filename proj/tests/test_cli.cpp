// Exercises the installed command-line surface end to end: exit codes,
// the dry-run composition table, the gradcheck self-test and the JSON
// inference output. Heavy training paths live in the acceptance suite.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "icps/checkpoint.hpp"
#include "icps/model.hpp"
#include "icps/pipeline/dataset.hpp"
#include "icps/scene.hpp"
#include "icps/trajectory.hpp"

namespace fs = std::filesystem;
using namespace icps;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(ICPS_CLI) + " " + args + " 2>&1";
  std::array<char, 4096> buffer;
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe)) output += buffer.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

const std::string kConfigs = std::string(ICPS_SOURCE_DIR) + "/configs";

}  // namespace

TEST_CASE("dry run prints the full-scale composition totals") {
  const RunResult r =
      run_cli("generate --config " + kConfigs + "/fullscale_dryrun.json --dry-run");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("156949") != std::string::npos);
  CHECK(r.output.find("Armoury") != std::string::npos);
  CHECK(r.output.find("1739") != std::string::npos);
}

TEST_CASE("missing composition CSV exits 2 and names the path") {
  fs::create_directories("cli_tmp");
  {
    std::ifstream in(kConfigs + "/desk.json");
    nlohmann::json j;
    in >> j;
    j["composition"]["csv"] = "nowhere/missing_table.csv";
    std::ofstream out("cli_tmp/missing_csv.json");
    out << j.dump();
  }
  const RunResult r =
      run_cli("generate --config cli_tmp/missing_csv.json --dry-run");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("missing_table.csv") != std::string::npos);
}

TEST_CASE("unknown config keys exit 2") {
  fs::create_directories("cli_tmp");
  {
    std::ofstream out("cli_tmp/unknown_key.json");
    out << R"({"seed":1,"output_dir":"x","surprise":true})";
  }
  const RunResult r = run_cli("generate --config cli_tmp/unknown_key.json");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("surprise") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("generate").exit_code == 2);           // missing --config
  CHECK(run_cli("no-such-command").exit_code == 2);
}

TEST_CASE("gradcheck passes clean and fails sabotaged") {
  const RunResult clean = run_cli("gradcheck");
  CHECK(clean.exit_code == 0);
  CHECK(clean.output.find("FAIL") == std::string::npos);
  CHECK(clean.output.find("dense") != std::string::npos);
  CHECK(clean.output.find("pose_loss") != std::string::npos);

  const RunResult bad = run_cli("gradcheck --sabotage dense");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("FAIL") != std::string::npos);

  // stable across reruns
  const RunResult again = run_cli("gradcheck");
  CHECK(again.output == clean.output);
}

TEST_CASE("inference covers exit codes and JSON round trip") {
  fs::remove_all("cli_tmp/infer");
  fs::create_directories("cli_tmp/infer/regressors");

  // Small untrained models checkpointed straight from the builders.
  ClassifierConfig ccfg;
  ccfg.input_h = ccfg.input_w = 16;
  ccfg.num_classes = 2;
  ccfg.conv_filters = {4};
  ccfg.dense_widths = {8};
  CnnModel clf = build_classifier(ccfg, 3);
  CheckpointMeta cmeta;
  cmeta.scene_names = {"Alpha", "Beta"};
  save_checkpoint(clf, cmeta, "cli_tmp/infer/classifier.ckpt");

  SceneSpec scene;
  scene.id = 0;
  scene.name = "Alpha";
  scene.bounds = {{0, 0, 0}, {8, 6, 3}};
  scene.appearance_seed = 12;
  const Pose pose{{4, 3, 1.5}, look_rotation({1, 0, 0})};
  write_ppm(render(scene, pose, {}, 16, 16), "cli_tmp/infer/probe.ppm");

  SUBCASE("empty registry exits 3") {
    const RunResult r = run_cli(
        "infer --classifier cli_tmp/infer/classifier.ckpt "
        "--regressors cli_tmp/infer/regressors --image cli_tmp/infer/probe.ppm");
    CHECK(r.exit_code == 3);
  }

  SUBCASE("corrupt image exits 2") {
    std::ofstream bad("cli_tmp/infer/broken.ppm");
    bad << "P6\n8 8\n255\nxx";
    bad.close();
    RegressorConfig rcfg;
    rcfg.input_h = rcfg.input_w = 16;
    rcfg.conv_filters = {4};
    rcfg.dense_widths = {8};
    for (int id = 0; id < 2; ++id) {
      CheckpointMeta meta;
      meta.scene_id = id;
      meta.scene_name = id == 0 ? "Alpha" : "Beta";
      meta.norm_bounds = NormalizationBounds{{0, 0, 0}, {8, 6, 3}};
      save_checkpoint(build_regressor(rcfg, 5 + id), meta,
                      "cli_tmp/infer/regressors/r" + std::to_string(id) + ".ckpt");
    }
    const RunResult r = run_cli(
        "infer --classifier cli_tmp/infer/classifier.ckpt "
        "--regressors cli_tmp/infer/regressors --image cli_tmp/infer/broken.ppm");
    CHECK(r.exit_code == 2);

    const RunResult ok = run_cli(
        "infer --classifier cli_tmp/infer/classifier.ckpt "
        "--regressors cli_tmp/infer/regressors --image cli_tmp/infer/probe.ppm "
        "--json");
    CHECK(ok.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(ok.output);
    CHECK(j.contains("scene_name"));
    CHECK(j.at("probabilities").size() == 2);
    CHECK(j.at("position_m").size() == 3);
    CHECK(j.at("quaternion_wpqr").size() == 4);
    // round trip: parse and re-serialize without loss of structure
    CHECK(nlohmann::json::parse(j.dump()) == j);
  }

  SUBCASE("wrong model kind exits 2") {
    const RunResult r = run_cli(
        "infer --classifier cli_tmp/infer/regressors "
        "--regressors cli_tmp/infer/regressors --image cli_tmp/infer/probe.ppm");
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("split requires a dataset manifest") {
  const RunResult r = run_cli("split --config " + kConfigs +
                              "/desk.json --manifest cli_tmp/none.json");
  CHECK(r.exit_code == 2);
}
