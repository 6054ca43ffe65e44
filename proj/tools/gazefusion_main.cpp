// gazefusion CLI: synthetic data generation, training, domain-adaptation
// experiments, evaluation, single-image prediction, and the fusion-variant
// ablation grid.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "gazefusion/datagen.hpp"
#include "gazefusion/io.hpp"
#include "gazefusion/train.hpp"
#include "gazefusion/viz.hpp"
#include "nlohmann/json.hpp"

using namespace gf;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

fs::path default_out_root() {
  const char* env = std::getenv("GAZEFUSION_OUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

struct ConfigOverrides {
  std::optional<int> input_size, heatmap_size, channels, epochs, batch_size, eval_every;
  std::optional<double> learning_rate, grl_lambda;
  std::optional<std::string> variant, backbone, attention_norm, loss_weighting, optimizer;
  std::optional<uint64_t> seed;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--input-size", input_size, "model input resolution (multiple of 32)");
    cmd->add_option("--heatmap-size", heatmap_size, "output heatmap resolution");
    cmd->add_option("--channels", channels, "backbone embedding channels");
    cmd->add_option("--variant", variant, "fusion variant: full or v1..v11");
    cmd->add_option("--backbone", backbone, "backbone kind: toy or paper_resnet50_like");
    cmd->add_option("--attention-norm", attention_norm, "softmax or sigmoid");
    cmd->add_option("--loss-weighting", loss_weighting, "fixed or learnable_uncertainty");
    cmd->add_option("--grl-lambda", grl_lambda, "gradient reversal strength");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch-size", batch_size, "batch size");
    cmd->add_option("--lr", learning_rate, "learning rate");
    cmd->add_option("--eval-every", eval_every, "epochs between evaluations");
    cmd->add_option("--optimizer", optimizer, "adam_like or sgd_momentum");
    cmd->add_option("--seed", seed, "master seed");
  }
};

// Parses {"model": {...}, "train": {...}}, collecting every violation with
// its key path rather than stopping at the first.
struct ResolvedConfig {
  ModelConfig model;
  TrainConfig train;
};

const std::set<std::string> kModelKeys = {
    "input_size",       "heatmap_size",  "backbone_kind", "backbone_channels",
    "fusion_variant",   "attention_normalization",        "da_enabled",
    "grl_lambda",       "loss_weighting", "seed"};
const std::set<std::string> kTrainKeys = {"epochs",     "batch_size", "learning_rate",
                                          "optimizer",  "precision",  "eval_every",
                                          "seed"};

ResolvedConfig load_config(const std::optional<std::string>& path,
                           const ConfigOverrides& ov, std::vector<std::string>& errors) {
  ResolvedConfig rc;
  rc.model = ModelConfig::toy();  // CLI default favors desk-scale runs
  if (path) {
    json j;
    try {
      j = json::parse(read_file(*path));
    } catch (const std::exception& e) {
      errors.push_back(strf("config %s: %s", path->c_str(), e.what()));
      return rc;
    }
    for (const auto& [key, val] : j.items()) {
      if (key != "model" && key != "train") {
        errors.push_back(strf("config key '%s': unknown section", key.c_str()));
        continue;
      }
      const auto& known = key == "model" ? kModelKeys : kTrainKeys;
      for (const auto& [sub, v] : val.items())
        if (!known.count(sub)) errors.push_back(strf("config key '%s.%s': unknown", key.c_str(), sub.c_str()));
    }
    try {
      if (j.contains("model")) rc.model = model_config_from_json_string(j["model"].dump());
    } catch (const std::exception& e) {
      errors.push_back(strf("config section 'model': %s", e.what()));
    }
    try {
      if (j.contains("train")) rc.train = train_config_from_json_string(j["train"].dump());
    } catch (const std::exception& e) {
      errors.push_back(strf("config section 'train': %s", e.what()));
    }
  }

  if (ov.input_size) rc.model.input_size = *ov.input_size;
  if (ov.heatmap_size) rc.model.heatmap_size = *ov.heatmap_size;
  if (ov.channels) rc.model.backbone_channels = *ov.channels;
  if (ov.variant) {
    auto v = fusion_variant_from_string(*ov.variant);
    if (!v)
      errors.push_back(strf("flag --variant: unknown variant '%s'", ov.variant->c_str()));
    else
      rc.model.fusion_variant = *v;
  }
  if (ov.backbone) {
    if (*ov.backbone == "toy")
      rc.model.backbone_kind = BackboneKind::toy;
    else if (*ov.backbone == "paper_resnet50_like")
      rc.model.backbone_kind = BackboneKind::paper_resnet50_like;
    else
      errors.push_back(strf("flag --backbone: unknown kind '%s'", ov.backbone->c_str()));
  }
  if (ov.attention_norm) {
    if (*ov.attention_norm == "softmax")
      rc.model.attention_normalization = AttentionNorm::softmax;
    else if (*ov.attention_norm == "sigmoid")
      rc.model.attention_normalization = AttentionNorm::sigmoid;
    else
      errors.push_back("flag --attention-norm: must be softmax or sigmoid");
  }
  if (ov.loss_weighting) {
    if (*ov.loss_weighting == "fixed")
      rc.model.loss_weighting = LossWeightMode::fixed;
    else if (*ov.loss_weighting == "learnable_uncertainty")
      rc.model.loss_weighting = LossWeightMode::learnable_uncertainty;
    else
      errors.push_back("flag --loss-weighting: must be fixed or learnable_uncertainty");
  }
  if (ov.grl_lambda) rc.model.grl_lambda = *ov.grl_lambda;
  if (ov.epochs) rc.train.epochs = *ov.epochs;
  if (ov.batch_size) rc.train.batch_size = *ov.batch_size;
  if (ov.learning_rate) rc.train.learning_rate = *ov.learning_rate;
  if (ov.eval_every) rc.train.eval_every = *ov.eval_every;
  if (ov.optimizer) {
    if (*ov.optimizer == "adam_like")
      rc.train.optimizer = OptimizerKind::adam_like;
    else if (*ov.optimizer == "sgd_momentum")
      rc.train.optimizer = OptimizerKind::sgd_momentum;
    else
      errors.push_back("flag --optimizer: must be adam_like or sgd_momentum");
  }
  if (ov.seed) {
    rc.model.seed = *ov.seed;
    rc.train.seed = *ov.seed;
  }

  for (const auto& v : rc.model.validate()) errors.push_back(v);
  for (const auto& v : rc.train.validate()) errors.push_back(v);
  return rc;
}

int fail_with(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  return 2;
}

json config_echo(const ResolvedConfig& rc) {
  json j;
  j["model"] = json::parse(model_config_to_json_string(rc.model));
  j["train"] = json::parse(train_config_to_json_string(rc.train));
  return j;
}

// Manifest first, work second: every command records its inputs and planned
// outputs before touching them.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& resolved_config, const std::vector<fs::path>& inputs,
                    const std::vector<std::string>& outputs, uint64_t seed) {
  json j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["seed"] = seed;
  j["resolved_config"] = resolved_config;
  json ins = json::array();
  for (const auto& p : inputs)
    ins.push_back({{"path", p.string()}, {"digest_fnv1a", strf("%016llx", static_cast<unsigned long long>(file_digest(p)))}});
  j["inputs"] = ins;
  j["outputs"] = outputs;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  j["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  write_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir, const char* fallback_name) {
  Dataset d;
  d.samples = load_annotations(dir / "annotations.jsonl", dir);
  d.name = d.samples.empty() ? fallback_name : d.samples.front().domain.name;
  return d;
}

// held-out split for training commands: last 15% (at least 1 sample)
std::pair<Dataset, Dataset> split_train_val(const Dataset& d) {
  const size_t n = d.samples.size();
  const size_t n_train = std::max<size_t>(1, n - std::max<size_t>(1, n * 15 / 100));
  Dataset train{d.name + "/train", {d.samples.begin(), d.samples.begin() + n_train}};
  Dataset val{d.name + "/val", {d.samples.begin() + n_train, d.samples.end()}};
  return {train, val};
}

LossWeights weights_for(const ResolvedConfig& rc, bool da_mode) {
  const std::vector<LossTerm> terms =
      da_mode ? std::vector<LossTerm>{LossTerm::heatmap, LossTerm::grl,
                                      LossTerm::rgb_to_depth, LossTerm::depth_to_rgb}
              : std::vector<LossTerm>{LossTerm::heatmap, LossTerm::inout};
  if (rc.model.loss_weighting == LossWeightMode::learnable_uncertainty)
    return LossWeights::make_learnable(terms);
  // fixed mode balances the tiny MSE term against the unit-scale BCE terms
  std::map<LossTerm, double> w;
  for (LossTerm t : terms) w[t] = t == LossTerm::heatmap ? 100.0 : 1.0;
  return LossWeights::make_fixed(w);
}

int cmd_gen_synth(const SynthSpec& spec, const std::string& style, fs::path out_dir) {
  SynthSpec s = spec;
  if (style == "a")
    s.domain_style = DomainStyle::style_a;
  else if (style == "b")
    s.domain_style = DomainStyle::style_b;
  else
    return fail_with({strf("flag --domain-style: must be a or b, got '%s'", style.c_str())});
  const auto violations = s.validate();
  if (!violations.empty()) return fail_with(violations);

  fs::create_directories(out_dir);
  json cfg;
  cfg["synth"] = {{"image_size", s.image_size},
                  {"n_samples", s.n_samples},
                  {"seed", s.seed},
                  {"domain_style", to_string(s.domain_style)},
                  {"distractor_count", s.distractor_count},
                  {"on_ray_distractor_prob", s.on_ray_distractor_prob}};
  write_manifest(out_dir, "gen-synth", cfg, {}, {"annotations.jsonl", "images/", "depth/"},
                 s.seed);

  const auto samples = generate_synthetic(s);
  save_dataset(samples, out_dir);
  std::printf("gen-synth: wrote %zu samples to %s\n", samples.size(), out_dir.string().c_str());
  return 0;
}

int cmd_train(const ResolvedConfig& rc, const fs::path& data_dir,
              const std::optional<std::string>& val_dir, fs::path out_dir,
              const std::optional<std::string>& resume,
              const std::optional<std::string>& config_path) {
  fs::create_directories(out_dir);
  std::vector<fs::path> inputs{data_dir / "annotations.jsonl"};
  if (val_dir) inputs.push_back(fs::path(*val_dir) / "annotations.jsonl");
  if (config_path) inputs.push_back(*config_path);
  write_manifest(out_dir, "train", config_echo(rc), inputs,
                 {"record.json", "curves.ppm", "best.ckpt", "last.ckpt", "report.json"},
                 rc.train.seed);

  Dataset train, val;
  if (val_dir) {
    train = load_dataset(data_dir, "train");
    val = load_dataset(*val_dir, "val");
  } else {
    std::tie(train, val) = split_train_val(load_dataset(data_dir, "train"));
  }

  GazeModel model(rc.model);
  LossWeights weights = weights_for(rc, false);
  FitOptions fo;
  fo.checkpoint_dir = out_dir;
  if (resume) fo.resume_from = *resume;
  const ExperimentRecord rec = fit(model, train, val, rc.train, weights, fo);
  write_file(out_dir / "record.json", rec.to_json_string() + "\n");

  std::vector<double> curve;
  for (const auto& e : rec.epochs) curve.push_back(e.mean_total);
  write_ppm(out_dir / "curves.ppm", render_curve_plot(curve));

  GazeModel best = rec.checkpoint_path.empty()
                       ? model
                       : model_from_checkpoint(load_checkpoint(rec.checkpoint_path));
  EvalOptions eo;
  eo.baseline_train = train.samples;
  eo.seed = rc.train.seed;
  const MetricReport mr = evaluate(best, val.samples, eo);
  write_file(out_dir / "report.json", mr.to_json_string() + "\n");
  std::printf("train: best epoch %d, val AUC %.4f, Avg.Dist. %.4f\n", rec.best_epoch,
              mr.auc_mean, mr.dist_mean);
  return 0;
}

int cmd_train_da(const ResolvedConfig& rc, const fs::path& source_dir,
                 const fs::path& target_dir, fs::path out_dir,
                 const std::optional<std::string>& config_path) {
  fs::create_directories(out_dir);
  std::vector<fs::path> inputs{source_dir / "annotations.jsonl",
                               target_dir / "annotations.jsonl"};
  if (config_path) inputs.push_back(*config_path);
  write_manifest(out_dir, "train-da", config_echo(rc), inputs,
                 {"plain_record.json", "da_record.json", "comparison.txt"}, rc.train.seed);

  const Dataset source = load_dataset(source_dir, "source");
  const Dataset target = load_dataset(target_dir, "target");
  const CrossDomainResult res =
      cross_domain_experiment(source, target, rc.model, rc.train, /*with_da=*/true, out_dir);

  write_file(out_dir / "plain_record.json", res.plain_record.to_json_string() + "\n");
  if (res.da_record)
    write_file(out_dir / "da_record.json", res.da_record->to_json_string() + "\n");
  write_file(out_dir / "comparison.txt", res.comparison_table());
  std::printf("%s", res.comparison_table().c_str());
  return 0;
}

int cmd_eval(const fs::path& ckpt, const fs::path& data_dir,
             const std::optional<std::string>& baseline_train_dir, fs::path out_dir,
             uint64_t seed) {
  fs::create_directories(out_dir);
  std::vector<fs::path> inputs{ckpt, data_dir / "annotations.jsonl"};
  if (baseline_train_dir) inputs.push_back(fs::path(*baseline_train_dir) / "annotations.jsonl");

  const Checkpoint c = load_checkpoint(ckpt);
  json cfg;
  cfg["model"] = json::parse(model_config_to_json_string(c.config));
  write_manifest(out_dir, "eval", cfg, inputs, {"report.json"}, seed);

  GazeModel model = model_from_checkpoint(c);
  const Dataset data = load_dataset(data_dir, "eval");
  Dataset baseline_train;
  EvalOptions eo;
  eo.seed = seed;
  if (baseline_train_dir) {
    baseline_train = load_dataset(*baseline_train_dir, "baseline-train");
    eo.baseline_train = baseline_train.samples;
  }
  const MetricReport mr = evaluate(model, data.samples, eo);
  write_file(out_dir / "report.json", mr.to_json_string() + "\n");
  std::printf("eval: AUC %.4f, Avg.Dist. %.4f over %zu samples\n", mr.auc_mean, mr.dist_mean,
              mr.per_sample.size());
  for (const auto& [name, ad] : mr.baselines)
    std::printf("  baseline %-10s AUC %.4f, Avg.Dist. %.4f\n", name.c_str(), ad.first,
                ad.second);
  return 0;
}

int cmd_predict(const fs::path& ckpt, const fs::path& image_path,
                const std::vector<double>& box, const std::optional<std::string>& depth_path,
                fs::path out_dir) {
  if (box.size() != 4)
    return fail_with({"flag --box: expected x_min,y_min,x_max,y_max"});
  fs::create_directories(out_dir);
  std::vector<fs::path> inputs{ckpt, image_path};
  if (depth_path) inputs.push_back(*depth_path);

  const Checkpoint c = load_checkpoint(ckpt);
  json cfg;
  cfg["model"] = json::parse(model_config_to_json_string(c.config));
  cfg["head_box"] = box;
  write_manifest(out_dir, "predict", cfg, inputs,
                 {"overlay.ppm", "heatmap.npy", "prediction.json"}, c.config.seed);

  Sample s;
  s.sample_id = image_path.stem().string();
  s.scene = read_ppm(image_path);
  s.head_box = HeadBox{box[0], box[1], box[2], box[3]};
  s.annotation.points = {GazePoint{0.5, 0.5}};  // placeholder, unused by predict
  if (depth_path) {
    const fs::path dp = *depth_path;
    if (dp.extension() == ".npy") {
      const Tensor t = read_npy(dp);
      s.depth = ImagePlane(1, t.dim(0), t.dim(1));
      s.depth.data.v = t.v;
    } else {
      s.depth = read_ppm(dp);
    }
  } else {
    std::fprintf(stderr,
                 "predict: no depth input; using luminance pseudo-depth (non-physical)\n");
    s.depth = make_luminance_depth_provider()->estimate(s.scene);
  }

  const auto violations = validate_sample(s);
  if (!violations.empty()) return fail_with(violations);

  GazeModel model = model_from_checkpoint(c);
  const ModelInput in = build_model_input(s, c.config);
  const ModelOutput out = model.predict(in);

  HeatmapGrid hm(c.config.heatmap_size);
  hm.data = out.heatmap;
  const double lo = *std::min_element(hm.data.v.begin(), hm.data.v.end());
  if (lo < 0.0)
    for (auto& v : hm.data.v) v -= lo;

  write_npy(out_dir / "heatmap.npy", hm.data);
  write_ppm(out_dir / "overlay.ppm", render_overlay(s.scene, hm, s.head_box));

  const PredictedPoint pp = predicted_point(hm);
  json pj;
  pj["gaze_point"] = {pp.x, pp.y};
  pj["inout_probability"] = out.inout_probability();
  write_file(out_dir / "prediction.json", pj.dump(2) + "\n");
  std::printf("predict: gaze at (%.4f, %.4f), in-frame probability %.3f\n", pp.x, pp.y,
              out.inout_probability());
  return 0;
}

int cmd_ablate(const ResolvedConfig& rc, const std::vector<std::string>& variant_names,
               const fs::path& data_dir, fs::path out_dir,
               const std::optional<std::string>& config_path) {
  std::vector<FusionVariant> variants;
  std::vector<std::string> errors;
  for (const auto& name : variant_names) {
    auto v = fusion_variant_from_string(name);
    if (!v)
      errors.push_back(strf("flag --variants: unknown variant '%s'", name.c_str()));
    else
      variants.push_back(*v);
  }
  if (!errors.empty()) return fail_with(errors);

  fs::create_directories(out_dir);
  std::vector<fs::path> inputs{data_dir / "annotations.jsonl"};
  if (config_path) inputs.push_back(*config_path);
  write_manifest(out_dir, "ablate", config_echo(rc), inputs, {"ablation.txt"}, rc.train.seed);

  auto [train, val] = split_train_val(load_dataset(data_dir, "data"));

  // rows AUC / Avg.Dist., one column per requested variant
  std::string head = strf("%-10s", "Exp.");
  std::string auc_row = strf("%-10s", "AUC");
  std::string dist_row = strf("%-10s", "Avg.Dist.");
  for (FusionVariant v : variants) {
    ModelConfig mc = rc.model;
    mc.fusion_variant = v;
    GazeModel model(mc);
    ResolvedConfig vc = rc;
    vc.model = mc;
    LossWeights weights = weights_for(vc, false);
    FitOptions fo;
    fo.checkpoint_dir = out_dir / to_string(v);
    const ExperimentRecord rec = fit(model, train, val, rc.train, weights, fo);
    GazeModel best = rec.checkpoint_path.empty()
                         ? model
                         : model_from_checkpoint(load_checkpoint(rec.checkpoint_path));
    EvalOptions eo;
    eo.include_baselines = false;
    const MetricReport mr = evaluate(best, val.samples, eo);
    head += strf(" %8s", to_string(v));
    auc_row += strf(" %8.4f", mr.auc_mean);
    dist_row += strf(" %8.4f", mr.dist_mean);
    std::printf("ablate: %s -> AUC %.4f, Avg.Dist. %.4f\n", to_string(v), mr.auc_mean,
                mr.dist_mean);
  }
  write_file(out_dir / "ablation.txt", head + "\n" + auc_row + "\n" + dist_row + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze target detection: three-pathway RGB-D model with domain adaptation"};
  app.require_subcommand(1);

  int threads = 2;
  app.add_option("--threads", threads, "worker threads (results are thread-count invariant)");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a deterministic synthetic dataset");
  SynthSpec spec;
  std::string style = "a";
  std::string gen_out;
  gen->add_option("--n", spec.n_samples, "number of samples")->required();
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--image-size", spec.image_size, "square image size (>= 32)");
  gen->add_option("--domain-style", style, "a or b");
  gen->add_option("--distractors", spec.distractor_count, "off-ray distractor count");
  gen->add_option("--onray-prob", spec.on_ray_distractor_prob,
                  "probability of an on-ray distractor at a different depth");
  gen->add_option("--out", gen_out, "output directory");

  // shared config plumbing for the training-style commands
  auto add_config = [](CLI::App* cmd, std::optional<std::string>& cfg, ConfigOverrides& ov) {
    cmd->add_option("--config", cfg, "JSON config file ({\"model\":{},\"train\":{}})");
    ov.add_flags(cmd);
  };

  auto* train = app.add_subcommand("train", "train a model on a labeled dataset");
  std::optional<std::string> train_cfg_path, train_val, train_resume;
  ConfigOverrides train_ov;
  std::string train_data, train_out;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--val-data", train_val, "held-out dataset directory (default: split)");
  train->add_option("--out", train_out, "output directory");
  train->add_option("--resume", train_resume, "resume from a last.ckpt");
  add_config(train, train_cfg_path, train_ov);

  auto* trainda = app.add_subcommand("train-da", "cross-domain training with adaptation");
  std::optional<std::string> da_cfg_path;
  ConfigOverrides da_ov;
  std::string da_source, da_target, da_out;
  trainda->add_option("--source", da_source, "labeled source dataset directory")->required();
  trainda->add_option("--target", da_target, "unlabeled target dataset directory")->required();
  trainda->add_option("--out", da_out, "output directory");
  add_config(trainda, da_cfg_path, da_ov);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string eval_ckpt, eval_data, eval_out;
  std::optional<std::string> eval_baseline_train;
  uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--baseline-train", eval_baseline_train,
                   "training dataset for the fixed-bias baseline");
  eval->add_option("--seed", eval_seed, "seed for the random baseline");
  eval->add_option("--out", eval_out, "output directory");

  auto* predict = app.add_subcommand("predict", "predict a gaze heatmap for one image");
  std::string pr_ckpt, pr_image, pr_out;
  std::optional<std::string> pr_depth;
  std::vector<double> pr_box;
  predict->add_option("--checkpoint", pr_ckpt, "model checkpoint")->required();
  predict->add_option("--image", pr_image, "input image (binary PPM)")->required();
  predict->add_option("--box", pr_box, "head box: x_min,y_min,x_max,y_max (normalized)")
      ->required()
      ->delimiter(',');
  predict->add_option("--depth", pr_depth, "depth plane (.npy or .pgm); omitted -> pseudo-depth");
  predict->add_option("--out", pr_out, "output directory");

  auto* ablate = app.add_subcommand("ablate", "train and score fusion variants");
  std::optional<std::string> ab_cfg_path;
  ConfigOverrides ab_ov;
  std::string ab_data, ab_out;
  std::vector<std::string> ab_variants;
  ablate->add_option("--variants", ab_variants, "comma-separated variant list")
      ->required()
      ->delimiter(',');
  ablate->add_option("--data", ab_data, "dataset directory")->required();
  ablate->add_option("--out", ab_out, "output directory");
  add_config(ablate, ab_cfg_path, ab_ov);

  CLI11_PARSE(app, argc, argv);
  set_num_threads(threads);

  try {
    if (gen->parsed()) {
      const fs::path out = gen_out.empty() ? default_out_root() / "gen-synth" : fs::path(gen_out);
      return cmd_gen_synth(spec, style, out);
    }
    if (train->parsed()) {
      std::vector<std::string> errors;
      const ResolvedConfig rc = load_config(train_cfg_path, train_ov, errors);
      if (!errors.empty()) return fail_with(errors);
      const fs::path out = train_out.empty() ? default_out_root() / "train" : fs::path(train_out);
      return cmd_train(rc, train_data, train_val, out, train_resume, train_cfg_path);
    }
    if (trainda->parsed()) {
      std::vector<std::string> errors;
      ResolvedConfig rc = load_config(da_cfg_path, da_ov, errors);
      if (!errors.empty()) return fail_with(errors);
      const fs::path out = da_out.empty() ? default_out_root() / "train-da" : fs::path(da_out);
      return cmd_train_da(rc, da_source, da_target, out, da_cfg_path);
    }
    if (eval->parsed()) {
      const fs::path out = eval_out.empty() ? default_out_root() / "eval" : fs::path(eval_out);
      return cmd_eval(eval_ckpt, eval_data, eval_baseline_train, out, eval_seed);
    }
    if (predict->parsed()) {
      const fs::path out = pr_out.empty() ? default_out_root() / "predict" : fs::path(pr_out);
      return cmd_predict(pr_ckpt, pr_image, pr_box, pr_depth, out);
    }
    if (ablate->parsed()) {
      std::vector<std::string> errors;
      const ResolvedConfig rc = load_config(ab_cfg_path, ab_ov, errors);
      if (!errors.empty()) return fail_with(errors);
      const fs::path out = ab_out.empty() ? default_out_root() / "ablate" : fs::path(ab_out);
      return cmd_ablate(rc, ab_variants, ab_data, out, ab_cfg_path);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
