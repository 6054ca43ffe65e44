#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "gazefusion/datagen.hpp"
#include "gazefusion/train.hpp"
#include "test_util.hpp"

using namespace gf;
namespace fs = std::filesystem;

namespace {

Dataset synth_dataset(const char* name, int n, uint64_t seed,
                      DomainStyle style = DomainStyle::style_a, double onray = 0.0) {
  SynthSpec spec;
  spec.image_size = 64;
  spec.n_samples = n;
  spec.seed = seed;
  spec.domain_style = style;
  spec.on_ray_distractor_prob = onray;
  Dataset d;
  d.name = name;
  d.samples = generate_synthetic(spec);
  return d;
}

std::vector<TrainItem> make_batch(const Dataset& d, const ModelConfig& cfg, size_t lo,
                                  size_t hi) {
  std::vector<TrainItem> out;
  for (size_t i = lo; i < hi && i < d.samples.size(); ++i)
    out.push_back(prepare_item(d.samples[i], cfg));
  return out;
}

LossWeights plain_weights() {
  // fixed-mode default: the MSE term is ~100x smaller than the BCE terms
  return LossWeights::make_fixed({{LossTerm::heatmap, 100.0}, {LossTerm::inout, 1.0}});
}

LossWeights da_weights(double grl = 1.0, double rec = 1.0) {
  return LossWeights::make_fixed({{LossTerm::heatmap, 1.0},
                                  {LossTerm::grl, grl},
                                  {LossTerm::rgb_to_depth, rec},
                                  {LossTerm::depth_to_rgb, rec}});
}

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "gf_train_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("loss is finite at step 0 and the report is itemized") {
  const ModelConfig cfg = ModelConfig::toy(64, 16, 3);
  GazeModel model(cfg);
  Optimizer opt(OptimizerKind::adam_like, 2.5e-4, model.parameters());
  const Dataset d = synth_dataset("d", 4, 1);
  const auto batch = make_batch(d, cfg, 0, 4);
  const LossWeights w = plain_weights();
  const LossReport report = train_step(model, opt, batch, w);
  CHECK(std::isfinite(report.total));
  CHECK(report.terms.count("heatmap") == 1);
  CHECK(report.terms.count("inout") == 1);
  CHECK(report.recompute_residual(w, false) < 1e-6);
}

TEST_CASE("two runs with the same seed produce identical loss sequences") {
  auto run = [](uint64_t seed) {
    const ModelConfig cfg = ModelConfig::toy(64, 16, seed);
    GazeModel model(cfg);
    Optimizer opt(OptimizerKind::adam_like, 1e-3, model.parameters());
    const Dataset d = synth_dataset("d", 8, 5);
    const LossWeights w = plain_weights();
    std::vector<double> losses;
    for (int step = 0; step < 8; ++step) {
      const auto batch = make_batch(d, cfg, 0, 8);
      losses.push_back(train_step(model, opt, batch, w).total);
    }
    return losses;
  };
  CHECK(run(7) == run(7));
  CHECK(run(7) != run(8));
}

TEST_CASE("overfit probe: 8 samples, toy model, loss collapses") {
  const ModelConfig cfg = ModelConfig::toy(64, 16, 11);
  GazeModel model(cfg);
  Optimizer opt(OptimizerKind::adam_like, 3e-3, model.parameters());
  const Dataset d = synth_dataset("d", 8, 21);
  const auto batch = make_batch(d, cfg, 0, 8);
  const LossWeights w = plain_weights();

  double initial = -1.0;
  double final_heatmap = -1.0;
  for (int step = 0; step < 120; ++step) {
    const LossReport r = train_step(model, opt, batch, w);
    if (step == 0) initial = r.terms.at("heatmap");
    final_heatmap = r.terms.at("heatmap");
  }
  CHECK(final_heatmap < 0.5 * initial);
}

TEST_CASE("out-of-frame samples contribute only the in/out loss") {
  const ModelConfig cfg = ModelConfig::toy(64, 16, 13);
  GazeModel model(cfg);
  Optimizer opt(OptimizerKind::adam_like, 1e-3, model.parameters());
  Dataset d = synth_dataset("d", 2, 31);
  d.samples[0].annotation.inside_frame = false;
  d.samples[0].annotation.points.clear();
  d.samples[1].annotation.inside_frame = false;
  d.samples[1].annotation.points.clear();
  const auto batch = make_batch(d, cfg, 0, 2);
  const LossReport r = train_step(model, opt, batch, plain_weights());
  CHECK(r.terms.at("heatmap") == 0.0);
  CHECK(r.terms.at("inout") > 0.0);
}

TEST_CASE("da_train_step: target batch adds no heatmap loss and reports both domains") {
  ModelConfig cfg = ModelConfig::toy(64, 16, 17);
  cfg.da_enabled = true;
  GazeModel model(cfg);
  ParamList params = model.parameters();
  Optimizer opt(OptimizerKind::adam_like, 1e-3, params);
  const Dataset src = synth_dataset("src", 4, 41, DomainStyle::style_a);
  const Dataset tgt1 = synth_dataset("t1", 4, 43, DomainStyle::style_b);
  const Dataset tgt2 = synth_dataset("t2", 4, 47, DomainStyle::style_b);
  const LossWeights w = da_weights();
  GRLConfig grl;

  const auto src_batch = make_batch(src, cfg, 0, 4);
  GazeModel model2(cfg);
  Optimizer opt2(OptimizerKind::adam_like, 1e-3, model2.parameters());

  const LossReport r1 =
      da_train_step(model, opt, src_batch, make_batch(tgt1, cfg, 0, 4), w, grl);
  const LossReport r2 =
      da_train_step(model2, opt2, src_batch, make_batch(tgt2, cfg, 0, 4), w, grl);

  // same source, different target: the heatmap term must be untouched
  CHECK(r1.terms.at("heatmap") == r2.terms.at("heatmap"));
  CHECK(r1.terms.count("grl_source") == 1);
  CHECK(r1.terms.count("grl_target") == 1);
  CHECK(r1.terms.count("inout") == 0);
  CHECK(std::isfinite(r1.total));
}

TEST_CASE("da-off equivalence: lambda 0 and zero-weight extras match plain training") {
  const Dataset d = synth_dataset("d", 12, 51);

  ModelConfig plain_cfg = ModelConfig::toy(64, 16, 19);
  GazeModel plain_model(plain_cfg);
  // in/out weight 0 so both objectives reduce to the heatmap term
  const LossWeights wp =
      LossWeights::make_fixed({{LossTerm::heatmap, 1.0}, {LossTerm::inout, 0.0}});
  Optimizer opt_p(OptimizerKind::adam_like, 1e-3, plain_model.parameters());

  ModelConfig da_cfg = plain_cfg;
  da_cfg.da_enabled = true;
  GazeModel da_model(da_cfg);
  const LossWeights wd = da_weights(/*grl=*/0.0, /*rec=*/0.0);
  Optimizer opt_d(OptimizerKind::adam_like, 1e-3, da_model.parameters());
  GRLConfig grl;
  grl.lambda = 0.0;

  for (int step = 0; step < 10; ++step) {
    const ModelConfig& cfg = plain_cfg;
    const auto src = make_batch(d, cfg, 0, 8);
    const auto tgt = make_batch(d, cfg, 8, 12);
    const LossReport rp = train_step(plain_model, opt_p, src, wp);
    const LossReport rd = da_train_step(da_model, opt_d, src, tgt, wd, grl);
    CHECK(std::fabs(rp.terms.at("heatmap") - rd.terms.at("heatmap")) <= 1e-12);
  }
}

TEST_CASE("fit: record carries one entry per epoch plus eval numbers") {
  const ModelConfig cfg = ModelConfig::toy(64, 16, 23);
  GazeModel model(cfg);
  const Dataset train = synth_dataset("train", 24, 61);
  const Dataset val = synth_dataset("val", 8, 67);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.learning_rate = 1e-3;
  tc.seed = 5;
  LossWeights w = plain_weights();
  FitOptions fo;
  fo.checkpoint_dir = temp_dir("fit");
  const ExperimentRecord rec = fit(model, train, val, tc, w, fo);
  CHECK(rec.epochs.size() == 2);
  CHECK(rec.epochs[0].epoch == 0);
  CHECK(rec.epochs[1].eval_auc >= 0.0);
  CHECK(rec.best_epoch >= 0);
  CHECK(fs::exists(fo.checkpoint_dir / "best.ckpt"));
  CHECK(fs::exists(fo.checkpoint_dir / "last.ckpt"));
  CHECK(!rec.to_json_string().empty());

  const ExperimentRecord parsed = ExperimentRecord::from_json_string(rec.to_json_string());
  CHECK(parsed.epochs.size() == rec.epochs.size());
  CHECK(parsed.final_auc == rec.final_auc);
}

TEST_CASE("fit: resume reproduces the uninterrupted trajectory") {
  const Dataset train = synth_dataset("train", 16, 71);
  const Dataset val = synth_dataset("val", 4, 73);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 8;
  tc.learning_rate = 1e-3;
  tc.seed = 9;

  // uninterrupted
  const ModelConfig cfg = ModelConfig::toy(64, 16, 29);
  GazeModel full_model(cfg);
  LossWeights w1 = plain_weights();
  FitOptions fo1;
  const ExperimentRecord full_rec = fit(full_model, train, val, tc, w1, fo1);

  // two epochs, then resume for the remaining two
  GazeModel part_model(cfg);
  LossWeights w2 = plain_weights();
  TrainConfig tc_half = tc;
  tc_half.epochs = 2;
  FitOptions fo2;
  fo2.checkpoint_dir = temp_dir("resume");
  fit(part_model, train, val, tc_half, w2, fo2);

  GazeModel resumed_model(cfg);
  LossWeights w3 = plain_weights();
  FitOptions fo3;
  fo3.resume_from = fo2.checkpoint_dir / "last.ckpt";
  const ExperimentRecord tail_rec = fit(resumed_model, train, val, tc, w3, fo3);

  REQUIRE(tail_rec.epochs.size() == 2);  // epochs 2 and 3
  CHECK(tail_rec.epochs[0].mean_total ==
        doctest::Approx(full_rec.epochs[2].mean_total).epsilon(1e-12));
  CHECK(tail_rec.epochs[1].mean_total ==
        doctest::Approx(full_rec.epochs[3].mean_total).epsilon(1e-12));
}

TEST_CASE("evaluate: the GT oracle predictor scores AUC 1 and sub-pixel distance") {
  const Dataset d = synth_dataset("d", 16, 81);
  Predictor oracle = [](const Sample& s) { return render_gt_heatmap(s.annotation, 64); };
  const MetricReport mr = evaluate(oracle, d.samples, 64);
  CHECK(mr.auc_mean == 1.0);
  CHECK(mr.dist_mean < 1.0 / 64.0);

  // aggregate equals the mean of per-sample rows
  double acc = 0.0;
  for (const auto& r : mr.per_sample) acc += r.auc;
  CHECK(std::fabs(acc / mr.per_sample.size() - mr.auc_mean) < 1e-9);
}

TEST_CASE("evaluate: baseline rows appear and random sits near chance") {
  const Dataset d = synth_dataset("d", 64, 91);
  Predictor oracle = [](const Sample& s) { return render_gt_heatmap(s.annotation, 64); };
  EvalOptions eo;
  eo.baseline_train = d.samples;
  const MetricReport mr = evaluate(oracle, d.samples, 64, eo);
  REQUIRE(mr.baselines.count("random") == 1);
  REQUIRE(mr.baselines.count("center") == 1);
  REQUIRE(mr.baselines.count("fixed_bias") == 1);
  CHECK(mr.baselines.at("random").first > 0.40);
  CHECK(mr.baselines.at("random").first < 0.60);
  CHECK(!mr.to_json_string().empty());
}

TEST_CASE("evaluate on a model: report is reproducible bit-for-bit") {
  const ModelConfig cfg = ModelConfig::toy(64, 16, 31);
  GazeModel model(cfg);
  const Dataset d = synth_dataset("d", 8, 95);
  const MetricReport a = evaluate(model, d.samples);
  const MetricReport b = evaluate(model, d.samples);
  CHECK(a.to_json_string() == b.to_json_string());
}

TEST_CASE("cross_domain_experiment rejects identical domain labels") {
  const Dataset d = synth_dataset("same", 24, 97);
  CHECK_THROWS_AS(
      cross_domain_experiment(d, d, ModelConfig::toy(64, 16, 1), TrainConfig{}, false),
      Error);
}

TEST_CASE("cross_domain_experiment emits a delta-in-parentheses table") {
  const Dataset src = synth_dataset("style_a", 40, 101, DomainStyle::style_a);
  const Dataset tgt = synth_dataset("style_b", 40, 103, DomainStyle::style_b);
  ModelConfig mc = ModelConfig::toy(64, 12, 3);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  tc.seed = 3;
  const CrossDomainResult res =
      cross_domain_experiment(src, tgt, mc, tc, /*with_da=*/true, temp_dir("xdom"));
  const std::string table = res.comparison_table();
  CHECK(table.find("(") != std::string::npos);
  CHECK(table.find("AUC") != std::string::npos);
  CHECK(table.find("with DA") != std::string::npos);
  CHECK(res.da_record.has_value());
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  CHECK(tc.validate().empty());
  CHECK(tc.epochs == 70);
  CHECK(tc.batch_size == 16);
  CHECK(tc.learning_rate == doctest::Approx(2.5e-4));
  tc.epochs = 0;
  CHECK(!tc.validate().empty());
  tc = TrainConfig{};
  tc.learning_rate = -1;
  CHECK(!tc.validate().empty());

  const std::string js = train_config_to_json_string(TrainConfig{});
  const TrainConfig parsed = train_config_from_json_string(js);
  CHECK(parsed.epochs == 70);
  CHECK(parsed.learning_rate == doctest::Approx(2.5e-4));
}

TEST_CASE("resume with learnable weights restores the full optimizer state") {
  const Dataset train = synth_dataset("train", 16, 107);
  const Dataset val = synth_dataset("val", 4, 109);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 8;
  tc.learning_rate = 1e-3;
  tc.seed = 13;
  const ModelConfig cfg = ModelConfig::toy(64, 8, 41);

  GazeModel full_model(cfg);
  LossWeights w1 = LossWeights::make_learnable({LossTerm::heatmap, LossTerm::inout});
  FitOptions fo1;
  const ExperimentRecord full_rec = fit(full_model, train, val, tc, w1, fo1);

  GazeModel part_model(cfg);
  LossWeights w2 = LossWeights::make_learnable({LossTerm::heatmap, LossTerm::inout});
  TrainConfig tc_half = tc;
  tc_half.epochs = 2;
  FitOptions fo2;
  fo2.checkpoint_dir = temp_dir("resume_learnable");
  fit(part_model, train, val, tc_half, w2, fo2);

  GazeModel resumed(cfg);
  LossWeights w3 = LossWeights::make_learnable({LossTerm::heatmap, LossTerm::inout});
  FitOptions fo3;
  fo3.resume_from = fo2.checkpoint_dir / "last.ckpt";
  const ExperimentRecord tail = fit(resumed, train, val, tc, w3, fo3);
  REQUIRE(tail.epochs.size() == 2);
  CHECK(tail.epochs[0].mean_total ==
        doctest::Approx(full_rec.epochs[2].mean_total).epsilon(1e-12));
  CHECK(tail.epochs[1].mean_total ==
        doctest::Approx(full_rec.epochs[3].mean_total).epsilon(1e-12));
  CHECK(w3.s_value(LossTerm::heatmap) ==
        doctest::Approx(w1.s_value(LossTerm::heatmap)).epsilon(1e-12));
}

TEST_CASE("learnable uncertainty weights shift during training") {
  const ModelConfig cfg = ModelConfig::toy(64, 16, 37);
  GazeModel model(cfg);
  LossWeights w = LossWeights::make_learnable({LossTerm::heatmap, LossTerm::inout});
  ParamList params = model.parameters();
  ParamList wp = w.params();
  params.insert(params.end(), wp.begin(), wp.end());
  Optimizer opt(OptimizerKind::adam_like, 1e-2, params);
  const Dataset d = synth_dataset("d", 8, 105);
  const auto batch = make_batch(d, cfg, 0, 8);
  const double s_before = w.s_value(LossTerm::heatmap);
  for (int step = 0; step < 5; ++step) train_step(model, opt, batch, w);
  CHECK(w.s_value(LossTerm::heatmap) != s_before);
}
