#include "gazefusion/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "gazefusion/io.hpp"
#include "nlohmann/json.hpp"

namespace gf {

using json = nlohmann::json;

// ---------------------------------------------------------------- backbones

ToyBackbone::ToyBackbone(int in_ch, int out_ch, Rng& rng) {
  const int c4 = std::max(out_ch / 4, 8);
  const int c2 = std::max(out_ch / 2, 8);
  const int widths[5] = {c4, c4, c2, c2, out_ch};
  int c = in_ch;
  for (int i = 0; i < 5; ++i) {
    blocks.emplace_back(c, widths[i], 3, 2, 1, rng);
    c = widths[i];
  }
}

Value ToyBackbone::forward(const Value& x, const Value& first_patch_scale) const {
  Value h = leaky_relu(blocks[0].forward(x, first_patch_scale));
  for (size_t i = 1; i < blocks.size(); ++i) h = leaky_relu(blocks[i].forward(h));
  return h;
}

void ToyBackbone::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < blocks.size(); ++i)
    blocks[i].collect(prefix + strf(".block%zu", i), out);
}

BottleneckBlock::BottleneckBlock(int in_ch, int mid_ch, int out_ch, int stride, Rng& rng)
    : reduce(in_ch, mid_ch, 1, 1, 0, rng),
      conv(mid_ch, mid_ch, 3, stride, 1, rng),
      // last conv scaled down so the residual path dominates at init; keeps
      // activations bounded without normalization layers
      expand(mid_ch, out_ch, 1, 1, 0, rng, 0.1) {
  if (in_ch != out_ch || stride != 1) proj.emplace(in_ch, out_ch, 1, stride, 0, rng);
}

Value BottleneckBlock::forward(const Value& x) const {
  Value h = relu(reduce.forward(x));
  h = relu(conv.forward(h));
  h = expand.forward(h);
  Value skip = proj ? proj->forward(x) : x;
  return relu(add(h, skip));
}

void BottleneckBlock::collect(const std::string& prefix, ParamList& out) const {
  reduce.collect(prefix + ".reduce", out);
  conv.collect(prefix + ".conv", out);
  expand.collect(prefix + ".expand", out);
  if (proj) proj->collect(prefix + ".proj", out);
}

ResNetBackbone::ResNetBackbone(int in_ch, int out_ch, Rng& rng)
    : stem(in_ch, 64, 7, 2, 3, rng) {
  const int counts[4] = {3, 4, 6, 3};
  const int mids[4] = {64, 128, 256, 512};
  const int strides[4] = {1, 2, 2, 2};
  int c = 64;
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < counts[s]; ++b) {
      const int stride = b == 0 ? strides[s] : 1;
      blocks.emplace_back(c, mids[s], mids[s] * 4, stride, rng);
      c = mids[s] * 4;
    }
  }
  embed = Conv2dLayer(c, out_ch, 1, 1, 0, rng);
}

Value ResNetBackbone::forward(const Value& x) const {
  Value h = relu(stem.forward(x));
  h = maxpool2d(h, 3, 2, 1);
  for (const auto& b : blocks) h = b.forward(h);
  return relu(embed.forward(h));
}

void ResNetBackbone::collect(const std::string& prefix, ParamList& out) const {
  stem.collect(prefix + ".stem", out);
  for (size_t i = 0; i < blocks.size(); ++i)
    blocks[i].collect(prefix + strf(".block%zu", i), out);
  embed.collect(prefix + ".embed", out);
}

Backbone::Backbone(BackboneKind k, int in_ch, int out_ch, Rng& rng) : kind(k) {
  if (kind == BackboneKind::toy)
    toy = ToyBackbone(in_ch, out_ch, rng);
  else
    resnet = ResNetBackbone(in_ch, out_ch, rng);
}

Value Backbone::forward(const Value& x, const Value& first_patch_scale) const {
  if (kind == BackboneKind::toy) return toy.forward(x, first_patch_scale);
  GF_CHECK(!first_patch_scale, "depth-aware stage is only wired for the toy backbone");
  return resnet.forward(x);
}

void Backbone::collect(const std::string& prefix, ParamList& out) const {
  if (kind == BackboneKind::toy)
    toy.collect(prefix, out);
  else
    resnet.collect(prefix, out);
}

// ------------------------------------------------------------------- heads

AttentionHead::AttentionHead(int channels, int h_, int w_, AttentionNorm n, Rng& rng)
    : l1(channels, std::max(channels / 2, 4), rng),
      l2(std::max(channels / 2, 4), h_ * w_, rng),
      norm(n),
      h(h_),
      w(w_) {}

Value AttentionHead::forward(const Value& e_head) const {
  Value pooled = global_avg_pool(e_head);
  Value z = l2.forward(relu(l1.forward(pooled)));
  Value a = norm == AttentionNorm::softmax ? softmax(z) : sigmoid(z);
  return reshape(a, {h, w});
}

void AttentionHead::collect(const std::string& prefix, ParamList& out) const {
  l1.collect(prefix + ".l1", out);
  l2.collect(prefix + ".l2", out);
}

FusionEncoder::FusionEncoder(int in_ch, int mid_ch, int out_ch, Rng& rng)
    : c1(in_ch, mid_ch, 3, 1, 1, rng), c2(mid_ch, out_ch, 3, 1, 1, rng) {}

Value FusionEncoder::forward(const Value& x) const {
  return leaky_relu(c2.forward(leaky_relu(c1.forward(x))));
}

void FusionEncoder::collect(const std::string& prefix, ParamList& out) const {
  c1.collect(prefix + ".c1", out);
  c2.collect(prefix + ".c2", out);
}

namespace {

struct DecoderStagePlan {
  int kernel, stride, pad, out_size;
};

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }

// Stride-2 stages doubling the size (k4 p1 exact, k4 p0 lands on 2s+2) until
// the target; a final stride-1 stage absorbs any ragged remainder. At least
// three stages overall.
std::vector<DecoderStagePlan> plan_upsampling(int from, int target) {
  GF_CHECK(from >= 1 && target >= from, "decoder plan: bad sizes %d -> %d", from, target);
  std::vector<DecoderStagePlan> plan;
  int cur = from;
  while (cur < target && 2 * cur <= target) {
    const int cand_exact = 2 * cur;
    const int cand_grow = 2 * cur + 2;
    int next;
    if (target % cand_exact == 0 && is_pow2(target / cand_exact)) {
      next = cand_exact;
      plan.push_back({4, 2, 1, next});
    } else if (cand_grow <= target && target % cand_grow == 0 && is_pow2(target / cand_grow)) {
      next = cand_grow;
      plan.push_back({4, 2, 0, next});
    } else {
      next = cand_exact;
      plan.push_back({4, 2, 1, next});
    }
    cur = next;
  }
  if (cur < target) {
    plan.push_back({target - cur + 1, 1, 0, target});
    cur = target;
  }
  while (plan.size() < 3) plan.push_back({3, 1, 1, cur});
  return plan;
}

std::vector<int> decoder_channels(int in_ch, size_t n_stages) {
  std::vector<int> ch;
  int c = in_ch;
  for (size_t i = 0; i < n_stages; ++i) {
    c = std::max(c / 2, 8);
    ch.push_back(c);
  }
  return ch;
}

}  // namespace

HeatmapDecoder::HeatmapDecoder(int in_ch, int feat_size, int out_size, Rng& rng) {
  const auto plan = plan_upsampling(feat_size, out_size);
  const auto ch = decoder_channels(in_ch, plan.size());
  int c = in_ch;
  for (size_t i = 0; i < plan.size(); ++i) {
    stages.emplace_back(c, ch[i], plan[i].kernel, plan[i].stride, plan[i].pad, rng);
    c = ch[i];
  }
  to_heatmap = Conv2dLayer(c, 1, 1, 1, 0, rng);
}

Value HeatmapDecoder::forward(const Value& x) const {
  Value h = x;
  for (const auto& s : stages) h = leaky_relu(s.forward(h));
  Value out = to_heatmap.forward(h);  // [1, hm, hm], no output nonlinearity
  return reshape(out, {out->val.dim(1), out->val.dim(2)});
}

void HeatmapDecoder::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < stages.size(); ++i)
    stages[i].collect(prefix + strf(".up%zu", i), out);
  to_heatmap.collect(prefix + ".out", out);
}

InOutHead::InOutHead(int channels, Rng& rng)
    : l1(channels, std::max(channels / 2, 4), rng), l2(std::max(channels / 2, 4), 1, rng) {}

Value InOutHead::forward(const Value& fused) const {
  return l2.forward(relu(l1.forward(global_avg_pool(fused))));
}

void InOutHead::collect(const std::string& prefix, ParamList& out) const {
  l1.collect(prefix + ".l1", out);
  l2.collect(prefix + ".l2", out);
}

DomainClassifier::DomainClassifier(int channels, Rng& rng)
    : l1(channels, std::max(channels / 2, 4), rng), l2(std::max(channels / 2, 4), 1, rng) {}

Value DomainClassifier::forward(const Value& e_head, double lambda) const {
  Value pooled = global_avg_pool(e_head);
  Value reversed = grad_reverse(pooled, lambda);
  return l2.forward(relu(l1.forward(reversed)));
}

void DomainClassifier::collect(const std::string& prefix, ParamList& out) const {
  l1.collect(prefix + ".l1", out);
  l2.collect(prefix + ".l2", out);
}

ReconDecoder::ReconDecoder(int in_ch, int feat_size, int out_size, Rng& rng) {
  GF_CHECK(out_size == feat_size * 32, "recon decoder expects a 32x upsampling path");
  // strides 2,2,2,4 over four blocks: 32x total
  const int strides[4] = {2, 2, 2, 4};
  const int kernels[4] = {4, 4, 4, 4};
  const int pads[4] = {1, 1, 1, 0};
  int c = in_ch;
  for (int i = 0; i < 4; ++i) {
    const int oc = i == 3 ? 3 : std::max(c / 2, 8);
    blocks.emplace_back(c, oc, kernels[i], strides[i], pads[i], rng);
    c = oc;
  }
}

Value ReconDecoder::forward(const Value& e) const {
  Value h = e;
  for (const auto& b : blocks) h = relu(b.forward(h));
  return h;
}

void ReconDecoder::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < blocks.size(); ++i)
    blocks[i].collect(prefix + strf(".block%zu", i), out);
}

// ---------------------------------------------------------------- GazeModel

namespace {

bool variant_has_head(FusionVariant v) { return v != FusionVariant::v1_scene_only; }

bool variant_has_scene(FusionVariant v) {
  return v != FusionVariant::v3_graydepth_head && v != FusionVariant::v4_colordepth_head;
}

bool variant_has_depth_net(FusionVariant v) {
  switch (v) {
    case FusionVariant::full:
    case FusionVariant::v3_graydepth_head:
    case FusionVariant::v4_colordepth_head:
    case FusionVariant::v8_single_encoder:
    case FusionVariant::v10_late_concat:
    case FusionVariant::v11_late_product:
      return true;
    default:
      return false;
  }
}

int scene_input_channels(FusionVariant v) {
  switch (v) {
    case FusionVariant::v5_early_rgb_graydepth: return 4;   // RGB + gray depth
    case FusionVariant::v6_early_rgb_mask_graydepth: return 5;
    case FusionVariant::v7_early_rgb_mask_colordepth: return 7;
    default: return 4;  // RGB + mask
  }
}

int depth_input_channels(FusionVariant v) {
  return v == FusionVariant::v3_graydepth_head ? 2 : 4;  // gray+mask vs colored+mask
}

bool variant_two_branch(FusionVariant v) {
  return v == FusionVariant::full || v == FusionVariant::v10_late_concat ||
         v == FusionVariant::v11_late_product;
}

}  // namespace

GazeModel::GazeModel(const ModelConfig& config) : cfg_(config) {
  const auto violations = cfg_.validate();
  GF_CHECK(violations.empty(), "invalid model config: %s", violations.front().c_str());
  feat_ = cfg_.feature_size();
  const int C = cfg_.backbone_channels;
  fused_ch_ = std::max(C / 2, 4);
  const FusionVariant v = cfg_.fusion_variant;

  if (cfg_.da_enabled)
    GF_CHECK(variant_two_branch(v) || v == FusionVariant::v8_single_encoder,
             "domain adaptation requires all three pathways, variant '%s' lacks them",
             to_string(v));

  auto stream = [&](const char* name) { return Rng(cfg_.seed, std::string("init:") + name); };

  if (variant_has_scene(v)) {
    Rng r = stream("scene_backbone");
    scene_bb_.emplace(cfg_.backbone_kind, scene_input_channels(v), C, r);
  }
  if (variant_has_depth_net(v)) {
    Rng r = stream("depth_backbone");
    depth_bb_.emplace(cfg_.backbone_kind, depth_input_channels(v), C, r);
  }
  if (variant_has_head(v)) {
    Rng r = stream("head_backbone");
    head_bb_.emplace(cfg_.backbone_kind, 3, C, r);
    Rng ra = stream("attention");
    attn_.emplace(C, feat_, feat_, cfg_.attention_normalization, ra);
  }

  // fusion encoders; input widths depend on what gets concatenated
  if (v == FusionVariant::v8_single_encoder) {
    Rng r = stream("encoder_single");
    enc_single_.emplace(3 * C, C, fused_ch_, r);
  } else {
    if (variant_has_scene(v)) {
      Rng r = stream("encoder_scene");
      enc_scene_.emplace(variant_has_head(v) ? 2 * C : C, C, fused_ch_, r);
    }
    if (variant_has_depth_net(v)) {
      Rng r = stream("encoder_depth");
      enc_depth_.emplace(2 * C, C, fused_ch_, r);
    }
  }

  const int dec_in = v == FusionVariant::v10_late_concat ? 2 * fused_ch_ : fused_ch_;
  {
    Rng r = stream("decoder");
    decoder_ = HeatmapDecoder(dec_in, feat_, cfg_.heatmap_size, r);
  }
  {
    Rng r = stream("inout");
    inout_ = InOutHead(fused_ch_, r);
  }

  if (cfg_.da_enabled) {
    Rng r1 = stream("domain_classifier");
    dom_clf_.emplace(C, r1);
    Rng r2 = stream("recon_scene_to_depth");
    scene_to_depth_.emplace(C, feat_, cfg_.input_size, r2);
    Rng r3 = stream("recon_depth_to_rgb");
    depth_to_rgb_.emplace(C, feat_, cfg_.input_size, r3);
  }
}

ParamList GazeModel::parameters() const {
  ParamList out;
  if (scene_bb_) scene_bb_->collect("scene_backbone", out);
  if (depth_bb_) depth_bb_->collect("depth_backbone", out);
  if (head_bb_) head_bb_->collect("head_backbone", out);
  if (attn_) attn_->collect("attention", out);
  if (enc_scene_) enc_scene_->collect("encoder_scene", out);
  if (enc_depth_) enc_depth_->collect("encoder_depth", out);
  if (enc_single_) enc_single_->collect("encoder_single", out);
  decoder_.collect("decoder", out);
  inout_.collect("inout", out);
  if (dom_clf_) dom_clf_->collect("domain_classifier", out);
  if (scene_to_depth_) scene_to_depth_->collect("recon_scene_to_depth", out);
  if (depth_to_rgb_) depth_to_rgb_->collect("recon_depth_to_rgb", out);
  return out;
}

ParamList GazeModel::da_parameters() const {
  ParamList out;
  if (dom_clf_) dom_clf_->collect("domain_classifier", out);
  if (scene_to_depth_) scene_to_depth_->collect("recon_scene_to_depth", out);
  if (depth_to_rgb_) depth_to_rgb_->collect("recon_depth_to_rgb", out);
  return out;
}

std::pair<Value, Value> GazeModel::head_pathway(const Value& head_crop) const {
  GF_CHECK(head_bb_ && attn_, "variant '%s' has no head pathway", to_string(cfg_.fusion_variant));
  Value e = head_bb_->forward(head_crop);
  Value a = attn_->forward(e);
  return {e, a};
}

Value GazeModel::scene_features(const Value& scene_input, const Value& gray_depth) const {
  GF_CHECK(scene_bb_, "variant '%s' has no scene network", to_string(cfg_.fusion_variant));
  Value scale;
  if (cfg_.fusion_variant == FusionVariant::v9_depth_aware_scene) {
    GF_CHECK(gray_depth, "depth-aware scene network needs the gray depth plane");
    scale = make_constant(depth_aware_scale(gray_depth->val));
  }
  return scene_bb_->forward(scene_input, scale);
}

Value GazeModel::depth_features(const Value& depth_input) const {
  GF_CHECK(depth_bb_, "variant '%s' has no depth network", to_string(cfg_.fusion_variant));
  return depth_bb_->forward(depth_input);
}

Value GazeModel::fuse_scene(const Value& e_head, const Value& e_scene_att) const {
  GF_CHECK(enc_scene_, "variant '%s' has no scene fusion encoder", to_string(cfg_.fusion_variant));
  if (!e_head) return enc_scene_->forward(e_scene_att);
  return enc_scene_->forward(concat_channels({e_head, e_scene_att}));
}

Value GazeModel::fuse_depth(const Value& e_head, const Value& e_depth_att) const {
  GF_CHECK(enc_depth_, "variant '%s' has no depth fusion encoder", to_string(cfg_.fusion_variant));
  return enc_depth_->forward(concat_channels({e_head, e_depth_att}));
}

Value GazeModel::predict_heatmap(const Value& e_hs, const Value& e_hd) const {
  Value fused;
  if (!e_hd) {
    fused = e_hs;
  } else {
    switch (cfg_.fusion_variant) {
      case FusionVariant::v10_late_concat:
        fused = concat_channels({e_hs, e_hd});
        break;
      case FusionVariant::v11_late_product:
        fused = mul(e_hs, e_hd);
        break;
      default:
        fused = add(e_hs, e_hd);  // channel-wise summation
    }
  }
  return decoder_.forward(fused);
}

Value GazeModel::predict_inout(const Value& e_hs, const Value& e_hd) const {
  Value fused = e_hd ? mul(e_hs, e_hd) : mul(e_hs, e_hs);
  return inout_.forward(fused);
}

Value GazeModel::domain_logit(const Value& e_head, double lambda) const {
  GF_CHECK(dom_clf_, "model was built without domain adaptation components");
  return dom_clf_->forward(e_head, lambda);
}

Tensor GazeModel::assemble_scene_input(const ModelInput& in) const {
  const int S = cfg_.input_size;
  const size_t plane = static_cast<size_t>(S) * S;
  const FusionVariant v = cfg_.fusion_variant;
  auto from_planes = [&](std::initializer_list<const double*> srcs) {
    Tensor t({static_cast<int>(srcs.size()), S, S});
    size_t off = 0;
    for (const double* s : srcs) {
      std::memcpy(t.v.data() + off, s, plane * sizeof(double));
      off += plane;
    }
    return t;
  };
  const double* rgb0 = in.scene_plus_mask.v.data();
  const double* rgb1 = rgb0 + plane;
  const double* rgb2 = rgb0 + 2 * plane;
  const double* mask = rgb0 + 3 * plane;
  const double* gray = in.gray_depth.v.data();
  const double* col0 = in.depth_plus_mask.v.data();
  const double* col1 = col0 + plane;
  const double* col2 = col0 + 2 * plane;

  switch (v) {
    case FusionVariant::v5_early_rgb_graydepth:
      return from_planes({rgb0, rgb1, rgb2, gray});
    case FusionVariant::v6_early_rgb_mask_graydepth:
      return from_planes({rgb0, rgb1, rgb2, mask, gray});
    case FusionVariant::v7_early_rgb_mask_colordepth:
      return from_planes({rgb0, rgb1, rgb2, mask, col0, col1, col2});
    default:
      return in.scene_plus_mask;
  }
}

Tensor GazeModel::assemble_depth_input(const ModelInput& in) const {
  if (cfg_.fusion_variant != FusionVariant::v3_graydepth_head) return in.depth_plus_mask;
  const int S = cfg_.input_size;
  const size_t plane = static_cast<size_t>(S) * S;
  Tensor t({2, S, S});
  std::memcpy(t.v.data(), in.gray_depth.v.data(), plane * sizeof(double));
  std::memcpy(t.v.data() + plane, in.scene_plus_mask.v.data() + 3 * plane,
              plane * sizeof(double));
  return t;
}

// Patch factors exp(-|d_center - d_neighbor|) for the first scene conv
// (k3 s2 p1), in im2col layout. Channel-independent, replicated per channel.
Tensor GazeModel::depth_aware_scale(const Tensor& gray_depth) const {
  const int S = cfg_.input_size;
  const int k = 3, stride = 2, pad = 1;
  const int os = (S + 2 * pad - k) / stride + 1;
  const int in_ch = scene_input_channels(cfg_.fusion_variant);
  Tensor scale({in_ch * k * k, os * os}, 1.0);
  const double* d = gray_depth.v.data();
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx) {
      double* row0 = scale.v.data() + static_cast<size_t>(ky * k + kx) * os * os;
      for (int oy = 0; oy < os; ++oy) {
        const int cy = oy * stride;  // center tap for k3 p1
        const int ny = oy * stride + ky - pad;
        for (int ox = 0; ox < os; ++ox) {
          const int cx = ox * stride;
          const int nx = ox * stride + kx - pad;
          double f = 1.0;
          if (ny >= 0 && ny < S && nx >= 0 && nx < S && cy < S && cx < S)
            f = std::exp(-std::fabs(d[cy * S + cx] - d[ny * S + nx]));
          row0[oy * os + ox] = f;
        }
      }
    }
  // replicate across input channels
  const size_t block = static_cast<size_t>(k) * k * os * os;
  for (int c = 1; c < in_ch; ++c)
    std::memcpy(scale.v.data() + c * block, scale.v.data(), block * sizeof(double));
  return scale;
}

ForwardNodes GazeModel::forward(const ModelInput& input, const ForwardOptions& opts) const {
  const FusionVariant v = cfg_.fusion_variant;
  GF_CHECK(input.scene_plus_mask.rank() == 3 && input.scene_plus_mask.dim(1) == cfg_.input_size,
           "forward: input built for size %d, model expects %d",
           input.scene_plus_mask.rank() == 3 ? input.scene_plus_mask.dim(1) : -1,
           cfg_.input_size);
  GF_CHECK(!opts.with_da || cfg_.da_enabled,
           "forward: DA pass requested but model was built with da_enabled=false");

  ForwardNodes nodes;

  Value e_head, attn;
  if (head_bb_) {
    Value crop = make_constant(input.head_crop);
    std::tie(e_head, attn) = head_pathway(crop);
    nodes.e_head = e_head;
    nodes.attention = attn;
  }

  Value e_scene;
  if (scene_bb_) {
    Value sin = make_constant(assemble_scene_input(input));
    Value gray = make_constant(input.gray_depth);
    e_scene = scene_features(sin, gray);
    nodes.e_scene_pre = e_scene;
  }
  Value e_depth;
  if (depth_bb_) {
    Value din = make_constant(assemble_depth_input(input));
    e_depth = depth_features(din);
    nodes.e_depth_pre = e_depth;
  }

  Value e_scene_att = e_scene && attn ? apply_attention(e_scene, attn) : e_scene;
  Value e_depth_att = e_depth && attn ? apply_attention(e_depth, attn) : e_depth;

  Value e_hs, e_hd;
  if (v == FusionVariant::v8_single_encoder) {
    e_hs = enc_single_->forward(concat_channels({e_head, e_scene_att, e_depth_att}));
  } else {
    if (enc_scene_) e_hs = fuse_scene(e_head, e_scene_att);
    if (enc_depth_) e_hd = fuse_depth(e_head, e_depth_att);
    if (!e_hs) {
      e_hs = e_hd;  // depth-only variants drive the decoder from e_hd
      e_hd = nullptr;
    }
  }

  if (opts.need_heatmap) {
    nodes.heatmap = predict_heatmap(e_hs, e_hd);
    nodes.inout_logit = predict_inout(e_hs, e_hd);
  }

  if (opts.with_da) {
    nodes.domain_logit = domain_logit(e_head, opts.grl_lambda);
    nodes.recon_depth = scene_to_depth_->forward(e_scene);
    nodes.recon_rgb = depth_to_rgb_->forward(e_depth);
  }
  return nodes;
}

ModelOutput GazeModel::predict(const ModelInput& input) const {
  ForwardNodes n = forward(input);
  ModelOutput out;
  out.heatmap = n.heatmap->val;
  out.inout_logit = n.inout_logit->val.v[0];
  return out;
}

// -------------------------------------------------------------- checkpoints

static json model_config_to_json(const ModelConfig& c) {
  json j;
  j["input_size"] = c.input_size;
  j["heatmap_size"] = c.heatmap_size;
  j["backbone_kind"] = c.backbone_kind == BackboneKind::toy ? "toy" : "paper_resnet50_like";
  j["backbone_channels"] = c.backbone_channels;
  j["fusion_variant"] = to_string(c.fusion_variant);
  j["attention_normalization"] =
      c.attention_normalization == AttentionNorm::softmax ? "softmax" : "sigmoid";
  j["da_enabled"] = c.da_enabled;
  j["grl_lambda"] = c.grl_lambda;
  j["loss_weighting"] =
      c.loss_weighting == LossWeightMode::fixed ? "fixed" : "learnable_uncertainty";
  j["seed"] = c.seed;
  return j;
}

static ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.input_size = j.at("input_size").get<int>();
  c.heatmap_size = j.at("heatmap_size").get<int>();
  c.backbone_kind = j.at("backbone_kind").get<std::string>() == "toy"
                        ? BackboneKind::toy
                        : BackboneKind::paper_resnet50_like;
  c.backbone_channels = j.at("backbone_channels").get<int>();
  auto fv = fusion_variant_from_string(j.at("fusion_variant").get<std::string>());
  GF_CHECK(fv.has_value(), "checkpoint: unknown fusion variant '%s'",
           j.at("fusion_variant").get<std::string>().c_str());
  c.fusion_variant = *fv;
  c.attention_normalization = j.at("attention_normalization").get<std::string>() == "softmax"
                                  ? AttentionNorm::softmax
                                  : AttentionNorm::sigmoid;
  c.da_enabled = j.at("da_enabled").get<bool>();
  c.grl_lambda = j.at("grl_lambda").get<double>();
  c.loss_weighting = j.at("loss_weighting").get<std::string>() == "fixed"
                         ? LossWeightMode::fixed
                         : LossWeightMode::learnable_uncertainty;
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

std::string model_config_to_json_string(const ModelConfig& c) {
  return model_config_to_json(c).dump();
}

ModelConfig model_config_from_json_string(const std::string& s) {
  return model_config_from_json(json::parse(s));
}

static void append_tensor_bytes(std::string& out, const Tensor& t) {
  const size_t off = out.size();
  out.resize(off + t.v.size() * sizeof(double));
  std::memcpy(out.data() + off, t.v.data(), t.v.size() * sizeof(double));
}

void save_checkpoint(const std::filesystem::path& path, const GazeModel& model,
                     const Optimizer* opt, const std::string& rng_state) {
  // the optimizer's list may extend the model's (learnable loss weights);
  // moments are stored 1:1 with the header's parameter table
  const ParamList params = opt ? opt->params() : model.parameters();
  json header;
  header["format"] = "gazefusion-checkpoint-v1";
  header["config"] = model_config_to_json(model.config());
  header["rng_state"] = rng_state;
  json plist = json::array();
  for (const auto& p : params) {
    json e;
    e["name"] = p.name;
    e["shape"] = p.node->val.shape;
    plist.push_back(e);
  }
  header["params"] = plist;
  if (opt) {
    header["optimizer"] = {
        {"kind", opt->kind() == OptimizerKind::adam_like ? "adam_like" : "sgd_momentum"},
        {"learning_rate", opt->learning_rate()},
        {"step", opt->step_count()},
    };
  }

  const std::string hs = header.dump();
  std::string out = "GFCKPT1\n";
  const uint64_t hlen = hs.size();
  out.append(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out += hs;
  for (const auto& p : params) append_tensor_bytes(out, p.node->val);
  if (opt) {
    for (const auto& t : opt->moment1()) append_tensor_bytes(out, t);
    for (const auto& t : opt->moment2()) append_tensor_bytes(out, t);
  }
  write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  GF_CHECK(bytes.size() > 16 && bytes.compare(0, 8, "GFCKPT1\n") == 0,
           "%s: not a gazefusion checkpoint", path.string().c_str());
  uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 8, sizeof(hlen));
  const json header = json::parse(bytes.substr(16, hlen));

  Checkpoint ck;
  ck.config = model_config_from_json(header.at("config"));
  ck.rng_state = header.value("rng_state", "");

  size_t off = 16 + hlen;
  auto take_tensor = [&bytes, &off, &path](std::vector<int> shape) {
    Tensor t(std::move(shape));
    const size_t n = t.v.size() * sizeof(double);
    GF_CHECK(off + n <= bytes.size(), "%s: truncated checkpoint payload",
             path.string().c_str());
    std::memcpy(t.v.data(), bytes.data() + off, n);
    off += n;
    return t;
  };

  for (const auto& e : header.at("params")) {
    const std::string name = e.at("name").get<std::string>();
    ck.params.emplace_back(name, take_tensor(e.at("shape").get<std::vector<int>>()));
  }
  if (header.contains("optimizer")) {
    const auto& o = header.at("optimizer");
    ck.opt_kind = o.at("kind").get<std::string>() == "adam_like" ? OptimizerKind::adam_like
                                                                 : OptimizerKind::sgd_momentum;
    ck.learning_rate = o.at("learning_rate").get<double>();
    ck.opt_step = o.at("step").get<int64_t>();
    for (const auto& p : ck.params) ck.opt_m.push_back(take_tensor(p.second.shape));
    for (const auto& p : ck.params) ck.opt_v.push_back(take_tensor(p.second.shape));
  }
  return ck;
}

GazeModel model_from_checkpoint(const Checkpoint& ck) {
  GazeModel model(ck.config);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : ck.params) by_name[name] = &t;
  for (const auto& p : model.parameters()) {
    auto it = by_name.find(p.name);
    GF_CHECK(it != by_name.end(), "checkpoint is missing parameter %s", p.name.c_str());
    GF_CHECK(p.node->val.shape == it->second->shape,
             "checkpoint parameter shape mismatch at %s", p.name.c_str());
    p.node->val = *it->second;
  }
  return model;
}

void restore_optimizer(const Checkpoint& ck, Optimizer& opt) {
  if (ck.opt_m.empty()) return;
  const ParamList& params = opt.params();
  GF_CHECK(params.size() == ck.params.size(),
           "optimizer/checkpoint parameter count mismatch (%zu vs %zu)", params.size(),
           ck.params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    GF_CHECK(params[i].name == ck.params[i].first,
             "optimizer/checkpoint parameter order mismatch at %s", params[i].name.c_str());
    params[i].node->val = ck.params[i].second;
  }
  opt.set_learning_rate(ck.learning_rate);
  opt.restore_state(ck.opt_step, ck.opt_m, ck.opt_v);
}

}  // namespace gf
