// End-to-end checks of the gazefusion binary: every subcommand, manifest
// discipline, reproducibility of reruns, and error-path exit codes.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "gazefusion/datagen.hpp"
#include "gazefusion/io.hpp"
#include "nlohmann/json.hpp"

using namespace gf;
namespace fs = std::filesystem;
using json = nlohmann::json;

static std::string g_binary;
static fs::path g_root;

namespace {

int run_cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = g_binary + " " + args;
  if (!log.empty()) cmd += " > " + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

fs::path fresh_dir(const char* name) {
  const fs::path p = g_root / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool dirs_equal(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  for (const auto& r : rel) {
    if (r.filename() == "manifest.json") continue;  // timestamps live here
    if (!fs::exists(b / r)) return false;
    if (read_file(a / r) != read_file(b / r)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("gen-synth is byte-reproducible and loads cleanly") {
  const fs::path d1 = fresh_dir("gen1");
  const fs::path d2 = fresh_dir("gen2");
  REQUIRE(run_cli("gen-synth --n 20 --seed 7 --out " + d1.string()) == 0);
  REQUIRE(run_cli("gen-synth --n 20 --seed 7 --out " + d2.string()) == 0);
  CHECK(dirs_equal(d1, d2));
  CHECK(fs::exists(d1 / "manifest.json"));

  const auto samples = load_annotations(d1 / "annotations.jsonl", d1);
  CHECK(samples.size() == 20);
  for (const auto& s : samples) CHECK(validate_sample(s).empty());
}

TEST_CASE("gen-synth --domain-style b tags records with style_b") {
  const fs::path d = fresh_dir("genb");
  REQUIRE(run_cli("gen-synth --n 3 --seed 1 --domain-style b --out " + d.string()) == 0);
  const auto samples = load_annotations(d / "annotations.jsonl", d);
  for (const auto& s : samples) CHECK(s.domain.name == "style_b");
}

TEST_CASE("train writes manifest, record, curves, checkpoints, report; reruns match") {
  const fs::path data = fresh_dir("train_data");
  REQUIRE(run_cli("gen-synth --n 60 --seed 11 --out " + data.string()) == 0);

  const std::string flags =
      " --data " + data.string() +
      " --channels 8 --epochs 2 --batch-size 16 --lr 1e-3 --seed 5 --backbone toy";
  const fs::path out1 = fresh_dir("train_out1");
  REQUIRE(run_cli("train" + flags + " --out " + out1.string(), g_root / "train1.log") == 0);
  for (const char* f : {"manifest.json", "record.json", "curves.ppm", "best.ckpt",
                        "last.ckpt", "report.json"})
    CHECK(fs::exists(out1 / f));

  // manifest carries the resolved config and input digests
  const json manifest = json::parse(read_file(out1 / "manifest.json"));
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("resolved_config").contains("model"));
  CHECK(!manifest.at("inputs").empty());

  const fs::path out2 = fresh_dir("train_out2");
  REQUIRE(run_cli("train" + flags + " --out " + out2.string(), g_root / "train2.log") == 0);
  CHECK(read_file(out1 / "report.json") == read_file(out2 / "report.json"));
  CHECK(read_file(out1 / "record.json") == read_file(out2 / "record.json"));
  CHECK(read_file(out1 / "best.ckpt") == read_file(out2 / "best.ckpt"));
}

TEST_CASE("eval reports baselines; predict emits overlay and raw heatmap") {
  const fs::path data = fresh_dir("eval_data");
  REQUIRE(run_cli("gen-synth --n 40 --seed 13 --out " + data.string()) == 0);
  const fs::path train_out = fresh_dir("eval_train");
  REQUIRE(run_cli("train --data " + data.string() +
                      " --channels 8 --epochs 1 --batch-size 16 --seed 3 --out " +
                      train_out.string(),
                  g_root / "eval_train.log") == 0);

  const fs::path eval_out = fresh_dir("eval_out");
  REQUIRE(run_cli("eval --checkpoint " + (train_out / "best.ckpt").string() + " --data " +
                      data.string() + " --baseline-train " + data.string() + " --out " +
                      eval_out.string(),
                  g_root / "eval.log") == 0);
  const json report = json::parse(read_file(eval_out / "report.json"));
  CHECK(report.at("baselines").contains("random"));
  CHECK(report.at("baselines").contains("center"));
  CHECK(report.at("baselines").contains("fixed_bias"));
  CHECK(report.at("per_sample").size() == 40);

  // predict on one generated image
  const fs::path pred_out = fresh_dir("pred_out");
  const auto samples = load_annotations(data / "annotations.jsonl", data);
  const std::string img = (data / "images" / (samples[0].sample_id + ".ppm")).string();
  const HeadBox& hb = samples[0].head_box;
  REQUIRE(run_cli(strf("predict --checkpoint %s --image %s --box %.4f,%.4f,%.4f,%.4f --out %s",
                       (train_out / "best.ckpt").string().c_str(), img.c_str(), hb.x_min,
                       hb.y_min, hb.x_max, hb.y_max, pred_out.string().c_str()),
                  g_root / "pred.log") == 0);
  const ImagePlane overlay = read_ppm(pred_out / "overlay.ppm");
  CHECK(overlay.height() == samples[0].scene.height());
  CHECK(overlay.width() == samples[0].scene.width());
  const Tensor hm = read_npy(pred_out / "heatmap.npy");
  CHECK(hm.shape == std::vector<int>{64, 64});
  const json pj = json::parse(read_file(pred_out / "prediction.json"));
  CHECK(pj.contains("gaze_point"));

  // no depth and no flag: pseudo-depth notice lands on stderr, still exit 0
  const fs::path pred2 = fresh_dir("pred_out2");
  REQUIRE(run_cli(strf("predict --checkpoint %s --image %s --box 0.1,0.1,0.4,0.4 --out %s",
                       (train_out / "best.ckpt").string().c_str(), img.c_str(),
                       pred2.string().c_str()),
                  g_root / "pred2.log") == 0);
  CHECK(read_file(g_root / "pred2.log").find("pseudo-depth") != std::string::npos);
}

TEST_CASE("ablate emits a variant grid") {
  const fs::path data = fresh_dir("ablate_data");
  REQUIRE(run_cli("gen-synth --n 40 --seed 17 --out " + data.string()) == 0);
  const fs::path out = fresh_dir("ablate_out");
  REQUIRE(run_cli("ablate --variants v1,v2 --data " + data.string() +
                      " --channels 8 --epochs 1 --batch-size 16 --seed 2 --out " + out.string(),
                  g_root / "ablate.log") == 0);
  const std::string table = read_file(out / "ablation.txt");
  CHECK(table.find("v1") != std::string::npos);
  CHECK(table.find("v2") != std::string::npos);
  CHECK(table.find("AUC") != std::string::npos);
}

TEST_CASE("train-da runs the cross-domain experiment and formats deltas") {
  const fs::path src = fresh_dir("da_src");
  const fs::path tgt = fresh_dir("da_tgt");
  REQUIRE(run_cli("gen-synth --n 40 --seed 19 --domain-style a --out " + src.string()) == 0);
  REQUIRE(run_cli("gen-synth --n 40 --seed 23 --domain-style b --out " + tgt.string()) == 0);
  const fs::path out = fresh_dir("da_out");
  REQUIRE(run_cli("train-da --source " + src.string() + " --target " + tgt.string() +
                      " --channels 8 --epochs 1 --batch-size 16 --seed 4 --out " + out.string(),
                  g_root / "da.log") == 0);
  CHECK(fs::exists(out / "plain_record.json"));
  CHECK(fs::exists(out / "da_record.json"));
  const std::string table = read_file(out / "comparison.txt");
  CHECK(table.find("(") != std::string::npos);
  CHECK(table.find("with DA") != std::string::npos);
}

TEST_CASE("config violations are all reported and exit nonzero") {
  const fs::path data = fresh_dir("badcfg_data");
  REQUIRE(run_cli("gen-synth --n 10 --seed 29 --out " + data.string()) == 0);
  const fs::path cfg = g_root / "bad_config.json";
  write_file(cfg,
             "{\"model\": {\"input_size\": 65, \"heatmap_size\": 2, \"bogus_key\": 1},"
             " \"train\": {\"epochs\": 0}}");
  const fs::path log = g_root / "badcfg.log";
  CHECK(run_cli("train --data " + data.string() + " --config " + cfg.string() + " --out " +
                    (g_root / "badcfg_out").string(),
                log) != 0);
  const std::string err = read_file(log);
  CHECK(err.find("input_size") != std::string::npos);
  CHECK(err.find("heatmap_size") != std::string::npos);
  CHECK(err.find("bogus_key") != std::string::npos);
  CHECK(err.find("epochs") != std::string::npos);
}

TEST_CASE("malformed annotations fail with a line-numbered message") {
  const fs::path data = fresh_dir("badann");
  write_file(data / "annotations.jsonl", "{\"sample_id\": broken\n");
  const fs::path log = g_root / "badann.log";
  CHECK(run_cli("train --data " + data.string() + " --channels 8 --epochs 1 --out " +
                    (g_root / "badann_out").string(),
                log) != 0);
  CHECK(read_file(log).find("line 1") != std::string::npos);
}

int main(int argc, char** argv) {
  REQUIRE(argc > 1);
  g_binary = argv[1];
  g_root = fs::temp_directory_path() / "gf_cli_tests";
  fs::remove_all(g_root);
  fs::create_directories(g_root);
  doctest::Context ctx;
  return ctx.run();
}
