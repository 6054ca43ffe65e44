#include "gazefusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gazefusion/preprocess.hpp"

namespace gf {

const char* to_string(LossTerm t) {
  switch (t) {
    case LossTerm::heatmap: return "heatmap";
    case LossTerm::inout: return "inout";
    case LossTerm::grl: return "grl";
    case LossTerm::rgb_to_depth: return "rgb_to_depth";
    case LossTerm::depth_to_rgb: return "depth_to_rgb";
  }
  return "?";
}

LossWeights LossWeights::make_fixed(std::map<LossTerm, double> w) {
  LossWeights lw;
  lw.mode = LossWeightMode::fixed;
  lw.fixed = std::move(w);
  for (const auto& [t, v] : lw.fixed)
    GF_CHECK(v >= 0.0 && std::isfinite(v), "fixed loss weight for %s must be finite and >= 0",
             to_string(t));
  return lw;
}

LossWeights LossWeights::make_learnable(const std::vector<LossTerm>& terms, double s_init) {
  LossWeights lw;
  lw.mode = LossWeightMode::learnable_uncertainty;
  for (LossTerm t : terms) lw.s[t] = make_param(Tensor::scalar(s_init));
  return lw;
}

ParamList LossWeights::params() const {
  ParamList out;
  for (const auto& [t, node] : s)
    out.push_back({std::string("loss_weight.") + to_string(t), node});
  return out;
}

double LossWeights::effective_weight(LossTerm t) const {
  if (mode == LossWeightMode::fixed) {
    auto it = fixed.find(t);
    return it == fixed.end() ? 1.0 : it->second;
  }
  auto it = s.find(t);
  GF_CHECK(it != s.end(), "no learnable weight registered for term %s", to_string(t));
  return std::exp(-it->second->val.v[0]);
}

double LossWeights::s_value(LossTerm t) const {
  auto it = s.find(t);
  GF_CHECK(it != s.end(), "no learnable weight registered for term %s", to_string(t));
  return it->second->val.v[0];
}

double heatmap_loss(const HeatmapGrid& pred, const HeatmapGrid& gt) {
  GF_CHECK(pred.data.same_shape(gt.data), "heatmap_loss: shape mismatch (%dx%d vs %dx%d)",
           pred.height(), pred.width(), gt.height(), gt.width());
  double acc = 0.0;
  for (int64_t i = 0; i < pred.data.numel(); ++i) {
    const double d = pred.data.v[static_cast<size_t>(i)] - gt.data.v[static_cast<size_t>(i)];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.data.numel());
}

double inout_loss(double logit, bool label) {
  const double y = label ? 1.0 : 0.0;
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::fabs(logit)));
}

std::pair<Value, LossReport> total_loss(const std::map<LossTerm, Value>& terms,
                                        const LossWeights& weights, bool da_mode) {
  if (da_mode) {
    GF_CHECK(terms.find(LossTerm::inout) == terms.end(), "in/out excluded under DA");
  } else {
    GF_CHECK(terms.count(LossTerm::heatmap), "plain mode requires the heatmap term");
    GF_CHECK(terms.count(LossTerm::inout), "plain mode requires the in/out term");
    GF_CHECK(!terms.count(LossTerm::grl) && !terms.count(LossTerm::rgb_to_depth) &&
                 !terms.count(LossTerm::depth_to_rgb),
             "DA terms are not accepted in plain mode");
  }

  Value total;
  LossReport report;
  for (const auto& [t, node] : terms) {
    GF_CHECK(node && node->val.numel() == 1, "loss term %s must be scalar", to_string(t));
    Value contrib;
    if (weights.mode == LossWeightMode::fixed) {
      contrib = scale(node, weights.effective_weight(t));
    } else {
      auto it = weights.s.find(t);
      GF_CHECK(it != weights.s.end(), "missing learnable weight for term %s", to_string(t));
      // exp(-s) * L + s
      contrib = add(mul(expv(scale(it->second, -1.0)), node), it->second);
    }
    total = total ? add(total, contrib) : contrib;
    report.terms[to_string(t)] = node->val.v[0];
    report.weights[to_string(t)] = weights.effective_weight(t);
  }
  GF_CHECK(total, "total_loss: no terms supplied");
  report.total = total->val.v[0];
  return {total, report};
}

double LossReport::recompute_residual(const LossWeights& w, bool da_mode) const {
  (void)da_mode;
  double acc = 0.0;
  for (const auto& [name, value] : terms) {
    const double weight = weights.at(name);
    acc += weight * value;
    if (w.mode == LossWeightMode::learnable_uncertainty) acc += -std::log(weight);
  }
  return std::fabs(acc - total);
}

// nearest lattice pixel to a normalized coordinate (lattice: i / (n-1))
static int lattice_index(double coord, int n) {
  return std::clamp(static_cast<int>(std::lround(coord * (n - 1))), 0, n - 1);
}

double heatmap_auc(const HeatmapGrid& pred, const GazeAnnotation& annotation) {
  GF_CHECK(!annotation.points.empty(), "heatmap_auc: annotation has no points");
  const int H = pred.height(), W = pred.width();
  std::set<int> positives;
  for (const auto& p : annotation.points)
    positives.insert(lattice_index(p.y, H) * W + lattice_index(p.x, W));

  const int64_t n = pred.data.numel();
  const int64_t n_pos = static_cast<int64_t>(positives.size());
  const int64_t n_neg = n - n_pos;
  GF_CHECK(n_neg > 0, "heatmap_auc: grid has no negative pixels");

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&pred](int a, int b) {
    return pred.data.v[static_cast<size_t>(a)] < pred.data.v[static_cast<size_t>(b)];
  });

  // average ranks over tie groups; ranks are 1-based
  double rank_pos_sum = 0.0;
  int64_t i = 0;
  while (i < n) {
    int64_t j = i;
    const double score = pred.data.v[static_cast<size_t>(order[static_cast<size_t>(i)])];
    while (j < n && pred.data.v[static_cast<size_t>(order[static_cast<size_t>(j)])] == score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (int64_t k = i; k < j; ++k)
      if (positives.count(order[static_cast<size_t>(k)])) rank_pos_sum += avg_rank;
    i = j;
  }
  const double u = rank_pos_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

PredictedPoint predicted_point(const HeatmapGrid& pred) {
  const int H = pred.height(), W = pred.width();
  const int64_t idx = pred.data.argmax_rowmajor();
  const int py = static_cast<int>(idx / W);
  const int px = static_cast<int>(idx % W);
  return PredictedPoint{static_cast<double>(px) / (W - 1), static_cast<double>(py) / (H - 1)};
}

double avg_distance(const HeatmapGrid& pred, const GazeAnnotation& annotation) {
  GF_CHECK(!annotation.points.empty(), "avg_distance: annotation has no points");
  const PredictedPoint pp = predicted_point(pred);
  const GazePoint gt = annotation.mean_point();
  return std::hypot(pp.x - gt.x, pp.y - gt.y);
}

const char* to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::random: return "random";
    case BaselineKind::center: return "center";
    case BaselineKind::fixed_bias: return "fixed_bias";
  }
  return "?";
}

int FixedBiasModel::quadrant(const HeadBox& box) {
  return (box.center_x() < 0.5 ? 0 : 1) + (box.center_y() < 0.5 ? 0 : 2);
}

FixedBiasModel build_fixed_bias(std::span<const Sample> train, int grid) {
  FixedBiasModel fb;
  fb.grid = grid;
  for (auto& t : fb.bin_sum) t = Tensor({grid, grid});
  for (const auto& s : train) {
    if (!s.annotation.is_inside() || s.annotation.points.empty()) continue;
    const HeatmapGrid gt = render_gt_heatmap(s.annotation, grid);
    const int q = FixedBiasModel::quadrant(s.head_box);
    for (int64_t i = 0; i < gt.data.numel(); ++i)
      fb.bin_sum[static_cast<size_t>(q)].v[static_cast<size_t>(i)] += gt.data.v[static_cast<size_t>(i)];
    ++fb.bin_count[static_cast<size_t>(q)];
  }
  return fb;
}

HeatmapGrid FixedBiasModel::predict(const Sample& eval) const {
  HeatmapGrid out(grid);
  const int q = quadrant(eval.head_box);
  if (bin_count[static_cast<size_t>(q)] > 0) {
    for (int64_t i = 0; i < out.data.numel(); ++i)
      out.data.v[static_cast<size_t>(i)] =
          bin_sum[static_cast<size_t>(q)].v[static_cast<size_t>(i)] / bin_count[static_cast<size_t>(q)];
    return out;
  }
  // empty bin: fall back to the global average
  int total = 0;
  for (int c : bin_count) total += c;
  if (total > 0) {
    for (int b = 0; b < 4; ++b)
      for (int64_t i = 0; i < out.data.numel(); ++i)
        out.data.v[static_cast<size_t>(i)] += bin_sum[static_cast<size_t>(b)].v[static_cast<size_t>(i)];
    for (auto& v : out.data.v) v /= total;
  }
  return out;
}

HeatmapGrid baseline_prediction(BaselineKind kind, const FixedBiasModel* fixed_bias,
                                const Sample& eval, int grid, uint64_t seed) {
  switch (kind) {
    case BaselineKind::random: {
      Rng rng(seed, "baseline:random:" + eval.sample_id);
      HeatmapGrid out(grid);
      for (auto& v : out.data.v) v = rng.normal();
      // shift to nonnegative so the grid satisfies the HeatmapGrid invariant;
      // AUC is rank-based and unaffected
      const double lo = *std::min_element(out.data.v.begin(), out.data.v.end());
      for (auto& v : out.data.v) v -= lo;
      return out;
    }
    case BaselineKind::center: {
      GazeAnnotation center;
      center.points = {GazePoint{0.5, 0.5}};
      return render_gt_heatmap(center, grid);
    }
    case BaselineKind::fixed_bias: {
      GF_CHECK(fixed_bias != nullptr, "fixed_bias baseline requires a training set");
      return fixed_bias->predict(eval);
    }
  }
  throw Error("unknown baseline kind");
}

}  // namespace gf
