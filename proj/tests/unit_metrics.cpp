#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gazefusion/datagen.hpp"
#include "gazefusion/metrics.hpp"
#include "gazefusion/preprocess.hpp"
#include "test_util.hpp"

using namespace gf;

namespace {

// all positive-negative pairs, 0.5 credit for ties; the independent oracle
double auc_pairwise_oracle(const HeatmapGrid& pred, const GazeAnnotation& ann) {
  const int H = pred.height(), W = pred.width();
  std::set<int> pos;
  for (const auto& p : ann.points) {
    const int x = std::clamp(static_cast<int>(std::lround(p.x * (W - 1))), 0, W - 1);
    const int y = std::clamp(static_cast<int>(std::lround(p.y * (H - 1))), 0, H - 1);
    pos.insert(y * W + x);
  }
  double wins = 0.0;
  int64_t pairs = 0;
  for (int64_t i = 0; i < pred.data.numel(); ++i) {
    if (!pos.count(static_cast<int>(i))) continue;
    for (int64_t j = 0; j < pred.data.numel(); ++j) {
      if (pos.count(static_cast<int>(j))) continue;
      ++pairs;
      if (pred.data.v[i] > pred.data.v[j])
        wins += 1.0;
      else if (pred.data.v[i] == pred.data.v[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

GazeAnnotation point_ann(double x, double y) {
  GazeAnnotation ann;
  ann.points = {GazePoint{x, y}};
  return ann;
}

}  // namespace

TEST_CASE("heatmap_loss: examples and loop oracle") {
  HeatmapGrid a(4), b(4);
  CHECK(heatmap_loss(a, b) == 0.0);
  for (auto& v : a.data.v) v = 0.1;
  CHECK(heatmap_loss(a, b) == doctest::Approx(0.01).epsilon(1e-12));

  Rng rng(5);
  HeatmapGrid p(4), q(4);
  for (auto& v : p.data.v) v = rng.uniform();
  for (auto& v : q.data.v) v = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) acc += (p.data.v[i] - q.data.v[i]) * (p.data.v[i] - q.data.v[i]);
  CHECK(heatmap_loss(p, q) == doctest::Approx(acc / 16.0).epsilon(1e-14));

  HeatmapGrid r(8);
  CHECK_THROWS_AS(heatmap_loss(p, r), Error);
}

TEST_CASE("inout_loss: symmetric point, saturation, direct formula") {
  CHECK(inout_loss(0.0, true) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(inout_loss(50.0, true) < 1e-20);
  CHECK(std::isfinite(inout_loss(50.0, false)));
  CHECK(inout_loss(-2.0, false) == doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-12));
  CHECK(std::isfinite(inout_loss(700.0, false)));
}

TEST_CASE("total_loss: fixed weights sum the terms") {
  std::map<LossTerm, Value> terms;
  terms[LossTerm::heatmap] = make_constant(Tensor::scalar(0.5));
  terms[LossTerm::inout] = make_constant(Tensor::scalar(0.2));
  LossWeights w = LossWeights::make_fixed({{LossTerm::heatmap, 1.0}, {LossTerm::inout, 1.0}});
  auto [total, report] = total_loss(terms, w, false);
  CHECK(total->val.v[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(report.terms.at("heatmap") == 0.5);
  CHECK(report.recompute_residual(w, false) < 1e-6);
}

TEST_CASE("total_loss: learnable mode with s=0 reduces to the plain sum") {
  std::map<LossTerm, Value> terms;
  terms[LossTerm::heatmap] = make_constant(Tensor::scalar(0.5));
  terms[LossTerm::inout] = make_constant(Tensor::scalar(0.2));
  LossWeights w = LossWeights::make_learnable({LossTerm::heatmap, LossTerm::inout});
  auto [total, report] = total_loss(terms, w, false);
  CHECK(total->val.v[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(report.recompute_residual(w, false) < 1e-6);
}

TEST_CASE("total_loss: in/out term is rejected under DA") {
  std::map<LossTerm, Value> terms;
  terms[LossTerm::heatmap] = make_constant(Tensor::scalar(0.5));
  terms[LossTerm::inout] = make_constant(Tensor::scalar(0.2));
  LossWeights w = LossWeights::make_fixed({});
  try {
    total_loss(terms, w, true);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("in/out excluded under DA") != std::string::npos);
  }
}

TEST_CASE("total_loss: plain mode rejects DA terms and requires both plain terms") {
  std::map<LossTerm, Value> terms;
  terms[LossTerm::heatmap] = make_constant(Tensor::scalar(0.5));
  LossWeights w = LossWeights::make_fixed({});
  CHECK_THROWS_AS(total_loss(terms, w, false), Error);
  terms[LossTerm::inout] = make_constant(Tensor::scalar(0.2));
  terms[LossTerm::grl] = make_constant(Tensor::scalar(0.1));
  CHECK_THROWS_AS(total_loss(terms, w, false), Error);
}

TEST_CASE("learnable weighting gradient: d total / d s_k = -exp(-s_k) L_k + 1") {
  LossWeights w = LossWeights::make_learnable({LossTerm::heatmap, LossTerm::inout}, 0.4);
  std::map<LossTerm, Value> terms;
  terms[LossTerm::heatmap] = make_constant(Tensor::scalar(0.8));
  terms[LossTerm::inout] = make_constant(Tensor::scalar(0.3));
  auto [total, report] = total_loss(terms, w, false);
  backward(total);
  for (auto [term, L] : {std::pair{LossTerm::heatmap, 0.8}, std::pair{LossTerm::inout, 0.3}}) {
    const double want = -std::exp(-0.4) * L + 1.0;
    CHECK(w.s.at(term)->grad.v[0] == doctest::Approx(want).epsilon(1e-12));
  }

  // finite-difference cross-check
  Rng pick(3);
  auto fwd = [&]() {
    std::map<LossTerm, Value> t2;
    t2[LossTerm::heatmap] = make_constant(Tensor::scalar(0.8));
    t2[LossTerm::inout] = make_constant(Tensor::scalar(0.3));
    return total_loss(t2, w, false).first;
  };
  const double err =
      gftest::finite_diff_rel_err(fwd, {w.s.at(LossTerm::heatmap), w.s.at(LossTerm::inout)}, 1, pick);
  CHECK(err < 1e-7);
}

TEST_CASE("heatmap_auc: perfect separation scores 1") {
  HeatmapGrid pred(8);
  pred.data.at(3, 5) = 1.0;
  CHECK(heatmap_auc(pred, point_ann(5.0 / 7.0, 3.0 / 7.0)) == 1.0);
}

TEST_CASE("heatmap_auc: constant map scores exactly 0.5") {
  HeatmapGrid pred(16);
  for (auto& v : pred.data.v) v = 0.77;
  CHECK(heatmap_auc(pred, point_ann(0.4, 0.6)) == 0.5);
}

TEST_CASE("heatmap_auc: 2x2 example scores 2/3") {
  HeatmapGrid pred(2, 2);
  pred.data.at(0, 0) = 0.9;
  pred.data.at(0, 1) = 0.1;
  pred.data.at(1, 0) = 0.4;
  pred.data.at(1, 1) = 0.6;
  // positive at the 0.6 pixel: wins vs 0.1 and 0.4, loses vs 0.9
  CHECK(heatmap_auc(pred, point_ann(1.0, 1.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("heatmap_auc equals the all-pairs oracle exactly on small grids") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + rng.uniform_int(13);  // 4..16
    HeatmapGrid pred(n);
    // quantized scores force ties
    for (auto& v : pred.data.v) v = rng.uniform_int(6) / 5.0;
    GazeAnnotation ann;
    const int n_pts = 1 + rng.uniform_int(3);
    for (int p = 0; p < n_pts; ++p)
      ann.points.push_back(GazePoint{rng.uniform(), rng.uniform()});
    const double fast = heatmap_auc(pred, ann);
    const double slow = auc_pairwise_oracle(pred, ann);
    CHECK(fast == slow);  // identical numerator and denominator, bit-exact
  }
}

TEST_CASE("heatmap_auc is invariant under strictly increasing transforms") {
  Rng rng(77);
  HeatmapGrid pred(12);
  for (auto& v : pred.data.v) v = rng.uniform();
  const GazeAnnotation ann = point_ann(0.3, 0.8);
  const double base = heatmap_auc(pred, ann);

  HeatmapGrid scaled(12), expd(12);
  for (int i = 0; i < 144; ++i) {
    scaled.data.v[i] = 3.0 * pred.data.v[i] + 2.0;
    expd.data.v[i] = std::exp(pred.data.v[i]);
  }
  CHECK(heatmap_auc(scaled, ann) == base);
  CHECK(heatmap_auc(expd, ann) == base);
}

TEST_CASE("avg_distance: identity and corner cases") {
  // peak on the lattice point of the annotation -> zero distance
  HeatmapGrid pred(64);
  pred.data.at(21, 42) = 1.0;
  CHECK(avg_distance(pred, point_ann(42.0 / 63.0, 21.0 / 63.0)) == 0.0);

  // peak at (0,0), gaze at (1,1): the unit-square diagonal
  HeatmapGrid corner(64);
  corner.data.at(0, 0) = 1.0;
  CHECK(avg_distance(corner, point_ann(1.0, 1.0)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("avg_distance: hand-computed lattice case") {
  HeatmapGrid pred(64);
  pred.data.at(16, 16) = 1.0;
  const double c = 16.0 / 63.0;
  const double want = std::hypot(0.75 - c, 0.75 - c);
  CHECK(avg_distance(pred, point_ann(0.75, 0.75)) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("avg_distance stays within [0, sqrt(2)] and ties break row-major") {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    HeatmapGrid pred(16);
    for (auto& v : pred.data.v) v = rng.uniform_int(4) / 3.0;
    const double d = avg_distance(pred, point_ann(rng.uniform(), rng.uniform()));
    CHECK(d >= 0.0);
    CHECK(d <= std::sqrt(2.0) + 1e-12);
  }
  HeatmapGrid tie(8);
  tie.data.at(2, 3) = 0.7;
  tie.data.at(5, 1) = 0.7;  // later in row-major order, must lose the tie
  const PredictedPoint pp = predicted_point(tie);
  CHECK(pp.x == doctest::Approx(3.0 / 7.0));
  CHECK(pp.y == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("perfect oracle: GT heatmap scores AUC 1 and near-zero distance") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const GazeAnnotation ann = point_ann(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95));
    const HeatmapGrid gt = render_gt_heatmap(ann, 64);
    CHECK(heatmap_auc(gt, ann) == 1.0);
    CHECK(avg_distance(gt, ann) < 1.0 / 64.0);
  }
}

TEST_CASE("center baseline peaks at the grid center") {
  SynthSpec spec;
  spec.seed = 1;
  const Sample s = generate_synthetic(spec)[0];
  const HeatmapGrid c = baseline_prediction(BaselineKind::center, nullptr, s, 64, 0);
  const int64_t idx = c.data.argmax_rowmajor();
  CHECK(idx / 64 == 32);
  CHECK(idx % 64 == 32);
}

TEST_CASE("random baseline sits at chance level over 500 synthetic samples") {
  SynthSpec spec;
  spec.image_size = 32;
  spec.n_samples = 500;
  spec.seed = 321;
  const auto samples = generate_synthetic(spec);
  double acc = 0.0;
  for (const auto& s : samples) {
    const HeatmapGrid r = baseline_prediction(BaselineKind::random, nullptr, s, 64, 7);
    acc += heatmap_auc(r, s.annotation);
  }
  const double mean = acc / 500.0;
  CHECK(mean >= 0.45);
  CHECK(mean <= 0.55);
}

TEST_CASE("fixed-bias baseline reproduces the per-quadrant binning") {
  // left-head samples always gaze at (0.25, 0.25)
  std::vector<Sample> train;
  SynthSpec spec;
  spec.n_samples = 8;
  spec.seed = 77;
  auto base = generate_synthetic(spec);
  for (size_t i = 0; i < base.size(); ++i) {
    Sample s = base[i];
    const bool left = i % 2 == 0;
    s.head_box = left ? HeadBox{0.05, 0.3, 0.25, 0.6} : HeadBox{0.7, 0.3, 0.95, 0.6};
    s.annotation.points = {left ? GazePoint{0.25, 0.25} : GazePoint{0.8, 0.8}};
    train.push_back(s);
  }
  const FixedBiasModel fb = build_fixed_bias(train, 64);

  Sample eval = base[0];
  eval.head_box = HeadBox{0.1, 0.35, 0.3, 0.65};  // left head
  const HeatmapGrid pred = baseline_prediction(BaselineKind::fixed_bias, &fb, eval, 64, 0);
  const int64_t idx = pred.data.argmax_rowmajor();
  CHECK(idx % 64 == std::lround(0.25 * 63));
  CHECK(idx / 64 == std::lround(0.25 * 63));

  CHECK_THROWS_AS(baseline_prediction(BaselineKind::fixed_bias, nullptr, eval, 64, 0), Error);
}

TEST_CASE("random baseline grids satisfy the nonnegativity invariant") {
  SynthSpec spec;
  spec.seed = 2;
  const Sample s = generate_synthetic(spec)[0];
  const HeatmapGrid r = baseline_prediction(BaselineKind::random, nullptr, s, 32, 5);
  for (double v : r.data.v) CHECK(v >= 0.0);
}
