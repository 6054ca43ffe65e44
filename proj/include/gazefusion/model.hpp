#pragma once

#include <filesystem>
#include <optional>

#include "gazefusion/core_types.hpp"
#include "gazefusion/nn.hpp"
#include "gazefusion/preprocess.hpp"

namespace gf {

// FeatureMap: [C, h, w] backbone embedding, h = w = input_size / 32.
// AttentionMap: [h, w], nonnegative; softmax mode sums to 1.
using FeatureMap = Tensor;
using AttentionMap = Tensor;

struct ModelOutput {
  Tensor heatmap;  // [heatmap_size, heatmap_size]
  double inout_logit = 0.0;

  double inout_probability() const { return 1.0 / (1.0 + std::exp(-inout_logit)); }
};

// Graph handles produced by one forward pass; losses attach to these.
struct ForwardNodes {
  Value heatmap;       // [hm, hm]
  Value inout_logit;   // [1]
  Value e_head;        // [C, h, w] or null when the variant has no head net
  Value attention;     // [h, w] or null
  Value e_scene_pre;   // pre-attention scene embedding, null if absent
  Value e_depth_pre;   // pre-attention depth embedding, null if absent
  Value domain_logit;  // [1], only when DA was requested
  Value recon_rgb;     // [3, R, R], only when DA was requested
  Value recon_depth;   // [3, R, R], only when DA was requested
};

struct ForwardOptions {
  bool with_da = false;
  double grl_lambda = 1.0;
  bool need_heatmap = true;  // target-domain DA passes skip the heatmap decoder
};

struct ToyBackbone {
  std::vector<Conv2dLayer> blocks;  // five stride-2 blocks, 32x reduction
  ToyBackbone() = default;
  ToyBackbone(int in_ch, int out_ch, Rng& rng);
  Value forward(const Value& x, const Value& first_patch_scale = nullptr) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct BottleneckBlock {
  Conv2dLayer reduce, conv, expand;
  std::optional<Conv2dLayer> proj;
  BottleneckBlock() = default;
  BottleneckBlock(int in_ch, int mid_ch, int out_ch, int stride, Rng& rng);
  Value forward(const Value& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct ResNetBackbone {
  Conv2dLayer stem;
  std::vector<BottleneckBlock> blocks;
  Conv2dLayer embed;  // the extra 1x1 layer producing backbone_channels
  ResNetBackbone() = default;
  ResNetBackbone(int in_ch, int out_ch, Rng& rng);
  Value forward(const Value& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Backbone {
  BackboneKind kind = BackboneKind::toy;
  ToyBackbone toy;
  ResNetBackbone resnet;
  Backbone() = default;
  Backbone(BackboneKind kind, int in_ch, int out_ch, Rng& rng);
  Value forward(const Value& x, const Value& first_patch_scale = nullptr) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

// GAP -> linear stack -> normalize -> reshape to [h, w].
struct AttentionHead {
  LinearLayer l1, l2;
  AttentionNorm norm = AttentionNorm::softmax;
  int h = 0, w = 0;
  AttentionHead() = default;
  AttentionHead(int channels, int h, int w, AttentionNorm norm, Rng& rng);
  Value forward(const Value& e_head) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

// Two conv blocks over concatenated embeddings.
struct FusionEncoder {
  Conv2dLayer c1, c2;
  FusionEncoder() = default;
  FusionEncoder(int in_ch, int mid_ch, int out_ch, Rng& rng);
  Value forward(const Value& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct HeatmapDecoder {
  std::vector<ConvT2dLayer> stages;  // each followed by relu
  Conv2dLayer to_heatmap;            // 1x1 to a single channel, no activation
  HeatmapDecoder() = default;
  HeatmapDecoder(int in_ch, int feat_size, int out_size, Rng& rng);
  Value forward(const Value& x) const;  // returns [out, out]
  void collect(const std::string& prefix, ParamList& out) const;
};

struct InOutHead {
  LinearLayer l1, l2;
  InOutHead() = default;
  InOutHead(int channels, Rng& rng);
  Value forward(const Value& fused) const;  // [1]
  void collect(const std::string& prefix, ParamList& out) const;
};

struct DomainClassifier {
  LinearLayer l1, l2;
  DomainClassifier() = default;
  DomainClassifier(int channels, Rng& rng);
  // gradient to e_head is reversed and scaled by lambda
  Value forward(const Value& e_head, double lambda) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

// Four transposed-conv + relu blocks reconstructing a 3-channel image at the
// input resolution from a backbone embedding.
struct ReconDecoder {
  std::vector<ConvT2dLayer> blocks;
  ReconDecoder() = default;
  ReconDecoder(int in_ch, int feat_size, int out_size, Rng& rng);
  Value forward(const Value& e) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

class GazeModel {
 public:
  explicit GazeModel(const ModelConfig& config);

  const ModelConfig& config() const { return cfg_; }
  ParamList parameters() const;         // stable, name-sorted order
  ParamList da_parameters() const;      // subset owned by DA components
  int fused_channels() const { return fused_ch_; }

  ForwardNodes forward(const ModelInput& input, const ForwardOptions& opts = {}) const;
  ModelOutput predict(const ModelInput& input) const;

  // individual stages, exposed for tests and probes
  std::pair<Value, Value> head_pathway(const Value& head_crop) const;  // (e_head, attn)
  Value scene_features(const Value& scene_input, const Value& gray_depth = nullptr) const;
  Value depth_features(const Value& depth_input) const;
  Value fuse_scene(const Value& e_head, const Value& e_scene_att) const;
  Value fuse_depth(const Value& e_head, const Value& e_depth_att) const;
  Value predict_heatmap(const Value& e_hs, const Value& e_hd) const;
  Value predict_inout(const Value& e_hs, const Value& e_hd) const;
  Value domain_logit(const Value& e_head, double lambda) const;

  bool has_head_net() const { return head_bb_.has_value(); }
  bool has_scene_net() const { return scene_bb_.has_value(); }
  bool has_depth_net() const { return depth_bb_.has_value(); }
  bool has_da() const { return cfg_.da_enabled; }

 private:
  Tensor assemble_scene_input(const ModelInput& in) const;
  Tensor assemble_depth_input(const ModelInput& in) const;
  Tensor depth_aware_scale(const Tensor& gray_depth) const;

  ModelConfig cfg_;
  int feat_ = 0;      // spatial size of backbone output
  int fused_ch_ = 0;  // C' of the fusion encoders
  std::optional<Backbone> scene_bb_, depth_bb_, head_bb_;
  std::optional<AttentionHead> attn_;
  std::optional<FusionEncoder> enc_scene_, enc_depth_, enc_single_;
  HeatmapDecoder decoder_;
  InOutHead inout_;
  std::optional<DomainClassifier> dom_clf_;
  std::optional<ReconDecoder> scene_to_depth_, depth_to_rgb_;
};

// apply_attention: out[c,i,j] = e[c,i,j] * attn[i,j] (free op, shared with tests)
inline Value apply_attention(const Value& e, const Value& attn) { return mul_spatial(e, attn); }

struct Checkpoint {
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor>> params;
  OptimizerKind opt_kind = OptimizerKind::adam_like;
  double learning_rate = 0.0;
  int64_t opt_step = 0;
  std::vector<Tensor> opt_m, opt_v;
  std::string rng_state;
};

std::string model_config_to_json_string(const ModelConfig& c);
ModelConfig model_config_from_json_string(const std::string& s);

void save_checkpoint(const std::filesystem::path& path, const GazeModel& model,
                     const Optimizer* opt = nullptr, const std::string& rng_state = "");
Checkpoint load_checkpoint(const std::filesystem::path& path);
GazeModel model_from_checkpoint(const Checkpoint& ck);
void restore_optimizer(const Checkpoint& ck, Optimizer& opt);

}  // namespace gf
