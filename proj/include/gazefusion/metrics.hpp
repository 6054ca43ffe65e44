#pragma once

#include <map>
#include <span>

#include "gazefusion/autograd.hpp"
#include "gazefusion/core_types.hpp"
#include "gazefusion/nn.hpp"

namespace gf {

enum class LossTerm { heatmap, inout, grl, rgb_to_depth, depth_to_rgb };
const char* to_string(LossTerm t);

// Per-term weighting for the training objective. Learnable mode realizes the
// "learnable weights" as homoscedastic-uncertainty weighting: each term
// contributes exp(-s_k) * L_k + s_k with s_k a trained parameter.
struct LossWeights {
  LossWeightMode mode = LossWeightMode::fixed;
  std::map<LossTerm, double> fixed;
  std::map<LossTerm, Value> s;  // learnable log-variances

  static LossWeights make_fixed(std::map<LossTerm, double> w);
  static LossWeights make_learnable(const std::vector<LossTerm>& terms, double s_init = 0.0);

  ParamList params() const;
  double effective_weight(LossTerm t) const;
  double s_value(LossTerm t) const;
};

struct LossReport {
  double total = 0.0;
  std::map<std::string, double> terms;    // raw per-term values
  std::map<std::string, double> weights;  // effective weights at report time
  // |recomputed - total| under the weighting formula; kept for the invariant
  double recompute_residual(const LossWeights& w, bool da_mode) const;
};

// Mean squared error over pixels.
double heatmap_loss(const HeatmapGrid& pred, const HeatmapGrid& gt);

// Logistic cross-entropy on a raw logit; stable for |logit| up to ~700.
double inout_loss(double logit, bool label);

// Combines scalar loss nodes per the active mode. Plain mode needs heatmap
// and in/out terms and rejects DA terms; DA mode rejects in/out (the heatmap
// term is absent on unlabeled target passes).
std::pair<Value, LossReport> total_loss(const std::map<LossTerm, Value>& terms,
                                        const LossWeights& weights, bool da_mode);

// Rank-based (Mann-Whitney) AUC with average-rank tie handling. Positives are
// the grid pixels nearest each annotation point on the i/(n-1) lattice.
double heatmap_auc(const HeatmapGrid& pred, const GazeAnnotation& annotation);

// Euclidean distance in normalized coordinates between the argmax pixel
// (lattice position i/(n-1), ties to the lowest row-major index) and the mean
// annotation point.
double avg_distance(const HeatmapGrid& pred, const GazeAnnotation& annotation);

struct PredictedPoint {
  double x = 0.0, y = 0.0;
};
PredictedPoint predicted_point(const HeatmapGrid& pred);

enum class BaselineKind { random, center, fixed_bias };
const char* to_string(BaselineKind k);

// Average of training GT heatmaps binned by head-box-center quadrant.
struct FixedBiasModel {
  int grid = 0;
  std::array<Tensor, 4> bin_sum;
  std::array<int, 4> bin_count{0, 0, 0, 0};
  static int quadrant(const HeadBox& box);
  HeatmapGrid predict(const Sample& eval) const;
};

FixedBiasModel build_fixed_bias(std::span<const Sample> train, int grid);

HeatmapGrid baseline_prediction(BaselineKind kind, const FixedBiasModel* fixed_bias,
                                const Sample& eval, int grid, uint64_t seed);

}  // namespace gf
