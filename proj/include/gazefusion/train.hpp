#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "gazefusion/metrics.hpp"
#include "gazefusion/model.hpp"

namespace gf {

enum class Precision { standard, high };

struct TrainConfig {
  int epochs = 70;
  int batch_size = 16;
  double learning_rate = 2.5e-4;
  OptimizerKind optimizer = OptimizerKind::adam_like;
  // All arithmetic runs in 64-bit floats; the flag is accepted for config
  // compatibility and gradient-check tooling.
  Precision precision = Precision::standard;
  int eval_every = 1;
  uint64_t seed = 0;

  std::vector<std::string> validate() const;
};

std::string train_config_to_json_string(const TrainConfig& c);
TrainConfig train_config_from_json_string(const std::string& s);

struct Dataset {
  std::string name;
  std::vector<Sample> samples;
};

// One preprocessed training example.
struct TrainItem {
  ModelInput input;
  HeatmapGrid gt_heatmap;  // empty when the gaze is out of frame
  bool inside = true;
};

TrainItem prepare_item(const Sample& sample, const ModelConfig& cfg);

// One optimizer update on a labeled batch (Eq. 7 objective).
LossReport train_step(GazeModel& model, Optimizer& opt, std::span<const TrainItem> batch,
                      const LossWeights& weights);

struct GRLConfig {
  double lambda = 1.0;
  enum class Schedule { fixed, ramp } schedule = Schedule::fixed;
  // ramp: lambda * (2 / (1 + exp(-10 p)) - 1) over training progress p
  double lambda_at(double progress) const;
};

// One optimizer update over a source batch (labeled) followed by a target
// batch (unlabeled): heatmap loss on source only, domain-classifier and both
// reconstruction losses on both, no in/out loss. Gradients accumulate across
// the two passes and are applied once.
LossReport da_train_step(GazeModel& model, Optimizer& opt,
                         std::span<const TrainItem> source_batch,
                         std::span<const TrainItem> target_batch,
                         const LossWeights& weights, const GRLConfig& grl,
                         double progress = 0.0);

struct EpochStats {
  int epoch = 0;
  double mean_total = 0.0;
  std::map<std::string, double> mean_terms;
  double eval_auc = -1.0;   // -1 when no eval ran this epoch
  double eval_dist = -1.0;
};

struct ExperimentRecord {
  std::string model_config_json;
  std::string train_config_json;
  std::string train_dataset;
  std::string eval_dataset;
  std::vector<EpochStats> epochs;
  double final_auc = 0.0;
  double final_dist = 0.0;
  int best_epoch = -1;
  double best_auc = -1.0;
  double wall_clock_sec = 0.0;
  std::string checkpoint_path;

  std::string to_json_string() const;
  static ExperimentRecord from_json_string(const std::string& s);
};

enum class TrainMode { plain, da };

struct FitOptions {
  TrainMode mode = TrainMode::plain;
  // unlabeled target pool, required in da mode
  const Dataset* target = nullptr;
  GRLConfig grl;
  // directory for last.ckpt / best.ckpt; empty disables checkpointing
  std::filesystem::path checkpoint_dir;
  // resume from a last.ckpt written by an earlier run
  std::optional<std::filesystem::path> resume_from;
};

ExperimentRecord fit(GazeModel& model, const Dataset& train, const Dataset& val,
                     const TrainConfig& tc, LossWeights& weights, const FitOptions& opts = {});

struct MetricReport {
  struct Row {
    std::string sample_id;
    double auc = 0.0;
    double dist = 0.0;
  };
  std::vector<Row> per_sample;
  double auc_mean = 0.0;
  double dist_mean = 0.0;
  // baseline name -> (auc, dist)
  std::map<std::string, std::pair<double, double>> baselines;
  std::string config_echo;
  uint64_t seed = 0;

  std::string to_json_string() const;
};

using Predictor = std::function<HeatmapGrid(const Sample&)>;

struct EvalOptions {
  bool include_baselines = true;
  // enables the fixed-bias baseline row
  std::span<const Sample> baseline_train = {};
  uint64_t seed = 0;
  std::string config_echo;
};

MetricReport evaluate(const Predictor& predictor, std::span<const Sample> samples, int grid,
                      const EvalOptions& opts = {});
MetricReport evaluate(const GazeModel& model, std::span<const Sample> samples,
                      const EvalOptions& opts = {});

struct CrossDomainResult {
  ExperimentRecord plain_record;
  std::optional<ExperimentRecord> da_record;
  double source_heldout_auc = 0.0, source_heldout_dist = 0.0;
  double target_auc_plain = 0.0, target_dist_plain = 0.0;
  double target_auc_da = 0.0, target_dist_da = 0.0;
  bool with_da = false;

  // Tables 3/4-shaped text: AUC / Avg.Dist. with deltas in parentheses.
  std::string comparison_table() const;
};

// Trains on the source domain, evaluates on the target domain; with_da adds a
// second run with the DA objective (source labeled, target unlabeled).
CrossDomainResult cross_domain_experiment(const Dataset& source, const Dataset& target,
                                          const ModelConfig& mc, const TrainConfig& tc,
                                          bool with_da,
                                          const std::filesystem::path& work_dir = {});

}  // namespace gf
