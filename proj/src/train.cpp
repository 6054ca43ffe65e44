#include "gazefusion/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nlohmann/json.hpp"

namespace gf {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<std::string> TrainConfig::validate() const {
  std::vector<std::string> out;
  if (epochs < 1) out.push_back(strf("train.epochs: must be >= 1, got %d", epochs));
  if (batch_size < 1) out.push_back(strf("train.batch_size: must be >= 1, got %d", batch_size));
  if (!(learning_rate > 0.0)) out.push_back("train.learning_rate: must be positive");
  if (eval_every < 1) out.push_back(strf("train.eval_every: must be >= 1, got %d", eval_every));
  return out;
}

TrainItem prepare_item(const Sample& sample, const ModelConfig& cfg) {
  TrainItem item;
  item.input = build_model_input(sample, cfg);
  item.inside = sample.annotation.is_inside();
  if (item.inside) item.gt_heatmap = render_gt_heatmap(sample.annotation, cfg.heatmap_size);
  return item;
}

double GRLConfig::lambda_at(double progress) const {
  if (schedule == Schedule::fixed) return lambda;
  const double p = std::clamp(progress, 0.0, 1.0);
  return lambda * (2.0 / (1.0 + std::exp(-10.0 * p)) - 1.0);
}

namespace {

Value mean_of(const std::vector<Value>& vs) {
  GF_CHECK(!vs.empty(), "mean_of: empty term list");
  Value acc = vs[0];
  for (size_t i = 1; i < vs.size(); ++i) acc = add(acc, vs[i]);
  return scale(acc, 1.0 / static_cast<double>(vs.size()));
}

void check_finite_report(const LossReport& report) {
  for (const auto& [name, value] : report.terms)
    GF_CHECK(std::isfinite(value), "non-finite loss term '%s' (%g); aborting step",
             name.c_str(), value);
  GF_CHECK(std::isfinite(report.total), "non-finite total loss; aborting step");
}

// MSE of a [3,R,R] reconstruction against the first three channels of a
// [4,R,R] model input tensor.
Value recon_loss(const Value& recon, const Tensor& input4) {
  const int R = recon->val.dim(1);
  Tensor target({3, R, R});
  std::copy(input4.v.begin(), input4.v.begin() + target.numel(), target.v.begin());
  return mse_loss(recon, target);
}

}  // namespace

LossReport train_step(GazeModel& model, Optimizer& opt, std::span<const TrainItem> batch,
                      const LossWeights& weights) {
  GF_CHECK(!batch.empty(), "train_step: empty batch");
  std::vector<Value> heatmap_terms, inout_terms;
  for (const TrainItem& item : batch) {
    ForwardNodes nodes = model.forward(item.input);
    if (item.inside) heatmap_terms.push_back(mse_loss(nodes.heatmap, item.gt_heatmap.data));
    inout_terms.push_back(bce_with_logit(nodes.inout_logit, item.inside ? 1.0 : 0.0));
  }
  std::map<LossTerm, Value> terms;
  terms[LossTerm::heatmap] = heatmap_terms.empty() ? make_constant(Tensor::scalar(0.0))
                                                   : mean_of(heatmap_terms);
  terms[LossTerm::inout] = mean_of(inout_terms);

  auto [total, report] = total_loss(terms, weights, /*da_mode=*/false);
  check_finite_report(report);
  backward(total);
  opt.step();
  opt.zero_grad();
  return report;
}

LossReport da_train_step(GazeModel& model, Optimizer& opt,
                         std::span<const TrainItem> source_batch,
                         std::span<const TrainItem> target_batch,
                         const LossWeights& weights, const GRLConfig& grl,
                         double progress) {
  GF_CHECK(!source_batch.empty() && !target_batch.empty(), "da_train_step: empty batch");
  GF_CHECK(model.has_da(), "da_train_step: model was built without DA components");
  const double lambda = grl.lambda_at(progress);

  static bool warned_labeled_target = false;
  if (!warned_labeled_target) {
    for (const TrainItem& item : target_batch) {
      if (item.inside && item.gt_heatmap.data.numel() > 1) {
        std::fprintf(stderr,
                     "[gazefusion] note: target batch carries gaze labels; they are "
                     "ignored during domain adaptation\n");
        warned_labeled_target = true;
        break;
      }
    }
  }

  ForwardOptions src_opts{.with_da = true, .grl_lambda = lambda, .need_heatmap = true};
  ForwardOptions tgt_opts{.with_da = true, .grl_lambda = lambda, .need_heatmap = false};

  std::vector<Value> heatmap_terms, grl_src, grl_tgt, r2d_terms, d2r_terms;
  for (const TrainItem& item : source_batch) {
    ForwardNodes nodes = model.forward(item.input, src_opts);
    if (item.inside) heatmap_terms.push_back(mse_loss(nodes.heatmap, item.gt_heatmap.data));
    grl_src.push_back(bce_with_logit(nodes.domain_logit, 0.0));  // source = 0
    r2d_terms.push_back(recon_loss(nodes.recon_depth, item.input.depth_plus_mask));
    d2r_terms.push_back(recon_loss(nodes.recon_rgb, item.input.scene_plus_mask));
  }
  for (const TrainItem& item : target_batch) {
    ForwardNodes nodes = model.forward(item.input, tgt_opts);
    grl_tgt.push_back(bce_with_logit(nodes.domain_logit, 1.0));  // target = 1
    r2d_terms.push_back(recon_loss(nodes.recon_depth, item.input.depth_plus_mask));
    d2r_terms.push_back(recon_loss(nodes.recon_rgb, item.input.scene_plus_mask));
  }

  const Value grl_src_mean = mean_of(grl_src);
  const Value grl_tgt_mean = mean_of(grl_tgt);

  std::map<LossTerm, Value> terms;
  if (!heatmap_terms.empty()) terms[LossTerm::heatmap] = mean_of(heatmap_terms);
  terms[LossTerm::grl] = scale(add(grl_src_mean, grl_tgt_mean), 0.5);
  terms[LossTerm::rgb_to_depth] = mean_of(r2d_terms);
  terms[LossTerm::depth_to_rgb] = mean_of(d2r_terms);

  auto [total, report] = total_loss(terms, weights, /*da_mode=*/true);
  report.terms["grl_source"] = grl_src_mean->val.v[0];
  report.terms["grl_target"] = grl_tgt_mean->val.v[0];
  check_finite_report(report);
  backward(total);
  opt.step();
  opt.zero_grad();
  return report;
}

// ------------------------------------------------------------------ records

static json train_config_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["optimizer"] = c.optimizer == OptimizerKind::adam_like ? "adam_like" : "sgd_momentum";
  j["precision"] = c.precision == Precision::standard ? "standard" : "high";
  j["eval_every"] = c.eval_every;
  j["seed"] = c.seed;
  return j;
}

std::string train_config_to_json_string(const TrainConfig& c) {
  return train_config_to_json(c).dump();
}

TrainConfig train_config_from_json_string(const std::string& s) {
  const json j = json::parse(s);
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("optimizer"))
    c.optimizer = j.at("optimizer").get<std::string>() == "sgd_momentum"
                      ? OptimizerKind::sgd_momentum
                      : OptimizerKind::adam_like;
  if (j.contains("precision"))
    c.precision = j.at("precision").get<std::string>() == "high" ? Precision::high
                                                                 : Precision::standard;
  c.eval_every = j.value("eval_every", c.eval_every);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string ExperimentRecord::to_json_string() const {
  json j;
  j["model_config"] = json::parse(model_config_json.empty() ? "{}" : model_config_json);
  j["train_config"] = json::parse(train_config_json.empty() ? "{}" : train_config_json);
  j["train_dataset"] = train_dataset;
  j["eval_dataset"] = eval_dataset;
  json eps = json::array();
  for (const auto& e : epochs) {
    json je;
    je["epoch"] = e.epoch;
    je["mean_total"] = e.mean_total;
    je["mean_terms"] = e.mean_terms;
    if (e.eval_auc >= 0.0) {
      je["eval_auc"] = e.eval_auc;
      je["eval_dist"] = e.eval_dist;
    }
    eps.push_back(je);
  }
  j["epochs"] = eps;
  j["final_auc"] = final_auc;
  j["final_dist"] = final_dist;
  j["best_epoch"] = best_epoch;
  j["best_auc"] = best_auc;
  j["wall_clock_sec"] = wall_clock_sec;
  j["checkpoint_path"] = checkpoint_path;
  return j.dump(2);
}

ExperimentRecord ExperimentRecord::from_json_string(const std::string& s) {
  const json j = json::parse(s);
  ExperimentRecord r;
  r.model_config_json = j.at("model_config").dump();
  r.train_config_json = j.at("train_config").dump();
  r.train_dataset = j.value("train_dataset", "");
  r.eval_dataset = j.value("eval_dataset", "");
  for (const auto& je : j.at("epochs")) {
    EpochStats e;
    e.epoch = je.at("epoch").get<int>();
    e.mean_total = je.at("mean_total").get<double>();
    for (const auto& [k, v] : je.at("mean_terms").items()) e.mean_terms[k] = v.get<double>();
    e.eval_auc = je.value("eval_auc", -1.0);
    e.eval_dist = je.value("eval_dist", -1.0);
    r.epochs.push_back(e);
  }
  r.final_auc = j.value("final_auc", 0.0);
  r.final_dist = j.value("final_dist", 0.0);
  r.best_epoch = j.value("best_epoch", -1);
  r.best_auc = j.value("best_auc", -1.0);
  r.wall_clock_sec = j.value("wall_clock_sec", 0.0);
  r.checkpoint_path = j.value("checkpoint_path", "");
  return r;
}

// ---------------------------------------------------------------------- fit

ExperimentRecord fit(GazeModel& model, const Dataset& train, const Dataset& val,
                     const TrainConfig& tc, LossWeights& weights, const FitOptions& opts) {
  const auto violations = tc.validate();
  GF_CHECK(violations.empty(), "invalid train config: %s", violations.front().c_str());
  GF_CHECK(!train.samples.empty(), "fit: empty training dataset");
  GF_CHECK(opts.mode != TrainMode::da || (opts.target && !opts.target->samples.empty()),
           "fit: da mode requires a target dataset");

  const auto t_start = std::chrono::steady_clock::now();
  const ModelConfig& mc = model.config();

  ParamList params = model.parameters();
  {
    ParamList wparams = weights.params();
    params.insert(params.end(), wparams.begin(), wparams.end());
  }
  Optimizer opt(tc.optimizer, tc.learning_rate, params);

  int start_epoch = 0;
  if (opts.resume_from) {
    const Checkpoint ck = load_checkpoint(*opts.resume_from);
    if (!ck.opt_m.empty()) {
      restore_optimizer(ck, opt);  // parameters + moments, names checked
    } else {
      std::map<std::string, const Tensor*> by_name;
      for (const auto& [name, t] : ck.params) by_name[name] = &t;
      for (auto& p : params) {
        auto it = by_name.find(p.name);
        GF_CHECK(it != by_name.end(), "resume: checkpoint is missing parameter %s",
                 p.name.c_str());
        p.node->val = *it->second;
      }
    }
    if (ck.rng_state.rfind("epoch:", 0) == 0)
      start_epoch = std::stoi(ck.rng_state.substr(6));
  }

  ExperimentRecord rec;
  rec.model_config_json = model_config_to_json_string(mc);
  rec.train_config_json = train_config_to_json(tc).dump();
  rec.train_dataset = train.name;
  rec.eval_dataset = val.name;

  const fs::path ckdir = opts.checkpoint_dir;
  const bool use_ck = !ckdir.empty();
  if (use_ck) fs::create_directories(ckdir);

  const int n = static_cast<int>(train.samples.size());
  const int steps_per_epoch = (n + tc.batch_size - 1) / tc.batch_size;

  for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
    // stateless per-epoch shuffles keep resumed runs on the same sequence
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(tc.seed, strf("shuffle:train:%d", epoch));
    shuffle_rng.shuffle(order);

    std::vector<int> tgt_order;
    if (opts.mode == TrainMode::da) {
      tgt_order.resize(opts.target->samples.size());
      std::iota(tgt_order.begin(), tgt_order.end(), 0);
      Rng tgt_rng(tc.seed, strf("shuffle:target:%d", epoch));
      tgt_rng.shuffle(tgt_order);
    }

    EpochStats stats;
    stats.epoch = epoch;
    size_t tgt_cursor = 0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      const int lo = step * tc.batch_size;
      const int hi = std::min(n, lo + tc.batch_size);
      std::vector<TrainItem> batch;
      batch.reserve(static_cast<size_t>(hi - lo));
      for (int i = lo; i < hi; ++i)
        batch.push_back(prepare_item(train.samples[static_cast<size_t>(order[static_cast<size_t>(i)])], mc));

      LossReport report;
      if (opts.mode == TrainMode::plain) {
        report = train_step(model, opt, batch, weights);
      } else {
        std::vector<TrainItem> tgt_batch;
        const size_t want = batch.size();
        for (size_t i = 0; i < want; ++i) {
          tgt_batch.push_back(prepare_item(
              opts.target->samples[static_cast<size_t>(tgt_order[tgt_cursor % tgt_order.size()])], mc));
          ++tgt_cursor;
        }
        const double progress =
            (epoch + static_cast<double>(step) / steps_per_epoch) / tc.epochs;
        report = da_train_step(model, opt, batch, tgt_batch, weights, opts.grl, progress);
      }
      stats.mean_total += report.total;
      for (const auto& [k, v] : report.terms) stats.mean_terms[k] += v;
    }
    stats.mean_total /= steps_per_epoch;
    for (auto& [k, v] : stats.mean_terms) v /= steps_per_epoch;

    const bool eval_now = ((epoch + 1) % tc.eval_every == 0) || epoch + 1 == tc.epochs;
    if (eval_now && !val.samples.empty()) {
      EvalOptions eo;
      eo.include_baselines = false;
      const MetricReport mr = evaluate(model, val.samples, eo);
      stats.eval_auc = mr.auc_mean;
      stats.eval_dist = mr.dist_mean;
      rec.final_auc = mr.auc_mean;
      rec.final_dist = mr.dist_mean;
      if (mr.auc_mean > rec.best_auc) {
        rec.best_auc = mr.auc_mean;
        rec.best_epoch = epoch;
        if (use_ck) {
          save_checkpoint(ckdir / "best.ckpt", model, &opt, strf("epoch:%d", epoch + 1));
          rec.checkpoint_path = (ckdir / "best.ckpt").string();
        }
      }
    }
    rec.epochs.push_back(stats);
    if (use_ck) save_checkpoint(ckdir / "last.ckpt", model, &opt, strf("epoch:%d", epoch + 1));
  }

  if (rec.checkpoint_path.empty() && use_ck)
    rec.checkpoint_path = (ckdir / "last.ckpt").string();
  rec.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

// ----------------------------------------------------------------- evaluate

MetricReport evaluate(const Predictor& predictor, std::span<const Sample> samples, int grid,
                      const EvalOptions& opts) {
  MetricReport report;
  report.seed = opts.seed;
  report.config_echo = opts.config_echo;

  std::optional<FixedBiasModel> fb;
  if (opts.include_baselines && !opts.baseline_train.empty())
    fb = build_fixed_bias(opts.baseline_train, grid);

  std::map<std::string, std::pair<double, double>> base_acc;
  for (const Sample& s : samples) {
    const HeatmapGrid pred = predictor(s);
    MetricReport::Row row;
    row.sample_id = s.sample_id;
    row.auc = heatmap_auc(pred, s.annotation);
    row.dist = avg_distance(pred, s.annotation);
    report.auc_mean += row.auc;
    report.dist_mean += row.dist;
    report.per_sample.push_back(row);

    if (opts.include_baselines) {
      std::vector<BaselineKind> kinds{BaselineKind::random, BaselineKind::center};
      if (fb) kinds.push_back(BaselineKind::fixed_bias);
      for (BaselineKind k : kinds) {
        const HeatmapGrid bp = baseline_prediction(k, fb ? &*fb : nullptr, s, grid, opts.seed);
        auto& [a, d] = base_acc[to_string(k)];
        a += heatmap_auc(bp, s.annotation);
        d += avg_distance(bp, s.annotation);
      }
    }
  }
  const double n = static_cast<double>(samples.size());
  if (n > 0) {
    report.auc_mean /= n;
    report.dist_mean /= n;
    for (auto& [name, ad] : base_acc)
      report.baselines[name] = {ad.first / n, ad.second / n};
  }
  return report;
}

MetricReport evaluate(const GazeModel& model, std::span<const Sample> samples,
                      const EvalOptions& opts) {
  EvalOptions eo = opts;
  if (eo.config_echo.empty()) eo.config_echo = model_config_to_json_string(model.config());
  const ModelConfig& mc = model.config();
  Predictor pred = [&model, &mc](const Sample& s) {
    const ModelInput in = build_model_input(s, mc);
    ModelOutput out = const_cast<const GazeModel&>(model).predict(in);
    HeatmapGrid hm(mc.heatmap_size);
    hm.data = out.heatmap;
    // MSE regression has no output clamp; shift for the nonnegativity
    // invariant (rank metrics are unaffected)
    const double lo = *std::min_element(hm.data.v.begin(), hm.data.v.end());
    if (lo < 0.0)
      for (auto& v : hm.data.v) v -= lo;
    return hm;
  };
  return evaluate(pred, samples, mc.heatmap_size, eo);
}

std::string MetricReport::to_json_string() const {
  json j;
  j["config"] = config_echo.empty() ? json::object() : json::parse(config_echo);
  j["seed"] = seed;
  j["aggregate"] = {{"auc", auc_mean}, {"avg_dist", dist_mean}, {"n", per_sample.size()}};
  json rows = json::array();
  for (const auto& r : per_sample)
    rows.push_back({{"sample_id", r.sample_id}, {"auc", r.auc}, {"avg_dist", r.dist}});
  j["per_sample"] = rows;
  json b = json::object();
  for (const auto& [name, ad] : baselines)
    b[name] = {{"auc", ad.first}, {"avg_dist", ad.second}};
  j["baselines"] = b;
  return j.dump(2);
}

// -------------------------------------------------------------- cross-domain

static Dataset slice_dataset(const Dataset& d, size_t lo, size_t hi, const char* suffix) {
  Dataset out;
  out.name = d.name + suffix;
  out.samples.assign(d.samples.begin() + static_cast<long>(lo),
                     d.samples.begin() + static_cast<long>(hi));
  return out;
}

CrossDomainResult cross_domain_experiment(const Dataset& source, const Dataset& target,
                                          const ModelConfig& mc, const TrainConfig& tc,
                                          bool with_da, const fs::path& work_dir) {
  GF_CHECK(source.name != target.name,
           "cross_domain_experiment: source and target domain labels are identical ('%s')",
           source.name.c_str());
  GF_CHECK(source.samples.size() >= 20 && target.samples.size() >= 20,
           "cross_domain_experiment: need at least 20 samples per domain");

  const size_t src_train_n = source.samples.size() * 85 / 100;
  const Dataset src_train = slice_dataset(source, 0, src_train_n, "/train");
  const Dataset src_heldout = slice_dataset(source, src_train_n, source.samples.size(), "/heldout");
  const size_t tgt_adapt_n = target.samples.size() / 2;
  const Dataset tgt_adapt = slice_dataset(target, 0, tgt_adapt_n, "/adapt");
  const Dataset tgt_eval = slice_dataset(target, tgt_adapt_n, target.samples.size(), "/eval");

  CrossDomainResult res;
  res.with_da = with_da;

  // plain run: trained on source, model-selected on held-out source
  {
    ModelConfig pmc = mc;
    pmc.da_enabled = false;
    GazeModel model(pmc);
    LossWeights weights = LossWeights::make_fixed(
        {{LossTerm::heatmap, 100.0}, {LossTerm::inout, 1.0}});
    FitOptions fo;
    fo.mode = TrainMode::plain;
    if (!work_dir.empty()) fo.checkpoint_dir = work_dir / "plain";
    res.plain_record = fit(model, src_train, src_heldout, tc, weights, fo);

    GazeModel best = res.plain_record.checkpoint_path.empty()
                         ? model
                         : model_from_checkpoint(load_checkpoint(res.plain_record.checkpoint_path));
    EvalOptions eo;
    eo.include_baselines = false;
    const MetricReport src_mr = evaluate(best, src_heldout.samples, eo);
    res.source_heldout_auc = src_mr.auc_mean;
    res.source_heldout_dist = src_mr.dist_mean;
    const MetricReport tgt_mr = evaluate(best, tgt_eval.samples, eo);
    res.target_auc_plain = tgt_mr.auc_mean;
    res.target_dist_plain = tgt_mr.dist_mean;
  }

  if (with_da) {
    ModelConfig dmc = mc;
    dmc.da_enabled = true;
    GazeModel model(dmc);
    // the adversarial term competes with the supervised task inside each
    // parameter's update direction; reconstruction stays deliberately small
    // so it regularizes rather than dominates the backbone gradients
    LossWeights weights = LossWeights::make_fixed({{LossTerm::heatmap, 100.0},
                                                   {LossTerm::grl, 1.0},
                                                   {LossTerm::rgb_to_depth, 0.02},
                                                   {LossTerm::depth_to_rgb, 0.02}});
    FitOptions fo;
    fo.mode = TrainMode::da;
    fo.target = &tgt_adapt;
    fo.grl.lambda = dmc.grl_lambda;
    fo.grl.schedule = GRLConfig::Schedule::ramp;
    if (!work_dir.empty()) fo.checkpoint_dir = work_dir / "da";
    ExperimentRecord rec = fit(model, src_train, tgt_eval, tc, weights, fo);

    GazeModel best = rec.checkpoint_path.empty()
                         ? model
                         : model_from_checkpoint(load_checkpoint(rec.checkpoint_path));
    EvalOptions eo;
    eo.include_baselines = false;
    const MetricReport tgt_mr = evaluate(best, tgt_eval.samples, eo);
    res.target_auc_da = tgt_mr.auc_mean;
    res.target_dist_da = tgt_mr.dist_mean;
    res.da_record = std::move(rec);
  }
  return res;
}

std::string CrossDomainResult::comparison_table() const {
  std::string out;
  out += strf("%-28s %10s %12s\n", "setting", "AUC", "Avg.Dist.");
  out += strf("%-28s %10.4f %12.4f\n", "source held-out (plain)", source_heldout_auc,
              source_heldout_dist);
  out += strf("%-28s %10.4f %12.4f   (drop %.4f)\n", "target (plain)", target_auc_plain,
              target_dist_plain, source_heldout_auc - target_auc_plain);
  if (with_da) {
    out += strf("%-28s %10.4f (%+.4f) %5.4f (%+.4f)\n", "target (with DA)", target_auc_da,
                target_auc_da - target_auc_plain, target_dist_da,
                target_dist_da - target_dist_plain);
  }
  return out;
}

}  // namespace gf
