#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gazefusion/tensor.hpp"

namespace gf {

// Coordinate convention used everywhere: normalized [0,1], origin top-left,
// x rightward, y downward. Pixel planes are [channels, height, width].

struct ImagePlane {
  Tensor data;  // [c, h, w], values in [0, 1]

  ImagePlane() = default;
  ImagePlane(int channels, int height, int width) : data(Tensor({channels, height, width})) {}

  int channels() const { return data.rank() == 3 ? data.dim(0) : 0; }
  int height() const { return data.rank() == 3 ? data.dim(1) : 0; }
  int width() const { return data.rank() == 3 ? data.dim(2) : 0; }
  double& at(int c, int y, int x) { return data.at(c, y, x); }
  double at(int c, int y, int x) const { return data.at(c, y, x); }
};

struct HeadBox {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
};

struct GazePoint {
  double x = 0.0, y = 0.0;
};

struct GazeAnnotation {
  std::vector<GazePoint> points;        // >= 1 entry unless gaze is out of frame
  std::optional<bool> inside_frame;     // absent means inside

  bool is_inside() const { return !inside_frame.has_value() || *inside_frame; }
  GazePoint mean_point() const {
    GazePoint m;
    for (const auto& p : points) {
      m.x += p.x;
      m.y += p.y;
    }
    const double n = points.empty() ? 1.0 : static_cast<double>(points.size());
    m.x /= n;
    m.y /= n;
    return m;
  }
};

enum class DomainRole { source, target };

struct DomainLabel {
  std::string name;
  DomainRole role = DomainRole::source;
};

struct Sample {
  ImagePlane scene;        // 3-channel RGB
  ImagePlane depth;        // 1-channel scalar depth, larger = farther
  HeadBox head_box;
  GazeAnnotation annotation;
  DomainLabel domain;
  std::string sample_id;
};

struct HeatmapGrid {
  Tensor data;  // [h, w], nonnegative

  HeatmapGrid() = default;
  explicit HeatmapGrid(int size) : data(Tensor({size, size})) {}
  HeatmapGrid(int h, int w) : data(Tensor({h, w})) {}
  int height() const { return data.dim(0); }
  int width() const { return data.dim(1); }
};

enum class BackboneKind { paper_resnet50_like, toy };
enum class AttentionNorm { softmax, sigmoid };
enum class LossWeightMode { fixed, learnable_uncertainty };

// §4.2 ablation/fusion variants plus the full model.
enum class FusionVariant {
  full,
  v1_scene_only,
  v2_scene_head,
  v3_graydepth_head,
  v4_colordepth_head,
  v5_early_rgb_graydepth,
  v6_early_rgb_mask_graydepth,
  v7_early_rgb_mask_colordepth,
  v8_single_encoder,
  v9_depth_aware_scene,
  v10_late_concat,
  v11_late_product,
};

const char* to_string(FusionVariant v);
std::optional<FusionVariant> fusion_variant_from_string(const std::string& s);

struct ModelConfig {
  int input_size = 224;          // square, divisible by 32
  int heatmap_size = 64;
  BackboneKind backbone_kind = BackboneKind::paper_resnet50_like;
  int backbone_channels = 1024;
  FusionVariant fusion_variant = FusionVariant::full;
  AttentionNorm attention_normalization = AttentionNorm::softmax;
  bool da_enabled = false;
  double grl_lambda = 1.0;
  LossWeightMode loss_weighting = LossWeightMode::fixed;
  uint64_t seed = 0;

  int feature_size() const { return input_size / 32; }

  static ModelConfig toy(int input_size = 64, int channels = 32, uint64_t seed = 0) {
    ModelConfig c;
    c.input_size = input_size;
    c.heatmap_size = 64;
    c.backbone_kind = BackboneKind::toy;
    c.backbone_channels = channels;
    c.seed = seed;
    return c;
  }

  std::vector<std::string> validate() const;
};

// Returns every invariant violation as a description; empty when valid.
std::vector<std::string> validate_sample(const Sample& sample);

std::vector<std::string> validate_image_plane(const ImagePlane& img, const std::string& what);
std::vector<std::string> validate_head_box(const HeadBox& box, const std::string& what);
std::vector<std::string> validate_annotation(const GazeAnnotation& ann, const std::string& what);

}  // namespace gf
