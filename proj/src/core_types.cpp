#include "gazefusion/core_types.hpp"

namespace gf {

const char* to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::full: return "full";
    case FusionVariant::v1_scene_only: return "v1";
    case FusionVariant::v2_scene_head: return "v2";
    case FusionVariant::v3_graydepth_head: return "v3";
    case FusionVariant::v4_colordepth_head: return "v4";
    case FusionVariant::v5_early_rgb_graydepth: return "v5";
    case FusionVariant::v6_early_rgb_mask_graydepth: return "v6";
    case FusionVariant::v7_early_rgb_mask_colordepth: return "v7";
    case FusionVariant::v8_single_encoder: return "v8";
    case FusionVariant::v9_depth_aware_scene: return "v9";
    case FusionVariant::v10_late_concat: return "v10";
    case FusionVariant::v11_late_product: return "v11";
  }
  return "?";
}

std::optional<FusionVariant> fusion_variant_from_string(const std::string& s) {
  static const std::pair<const char*, FusionVariant> table[] = {
      {"full", FusionVariant::full},
      {"v1", FusionVariant::v1_scene_only},
      {"v2", FusionVariant::v2_scene_head},
      {"v3", FusionVariant::v3_graydepth_head},
      {"v4", FusionVariant::v4_colordepth_head},
      {"v5", FusionVariant::v5_early_rgb_graydepth},
      {"v6", FusionVariant::v6_early_rgb_mask_graydepth},
      {"v7", FusionVariant::v7_early_rgb_mask_colordepth},
      {"v8", FusionVariant::v8_single_encoder},
      {"v9", FusionVariant::v9_depth_aware_scene},
      {"v10", FusionVariant::v10_late_concat},
      {"v11", FusionVariant::v11_late_product},
  };
  for (const auto& [name, v] : table)
    if (s == name) return v;
  return std::nullopt;
}

std::vector<std::string> validate_image_plane(const ImagePlane& img, const std::string& what) {
  std::vector<std::string> out;
  if (img.data.rank() != 3) {
    out.push_back(what + ": data must be rank 3 [c,h,w]");
    return out;
  }
  const int c = img.channels();
  if (c != 1 && c != 3) out.push_back(strf("%s: channels must be 1 or 3, got %d", what.c_str(), c));
  if (img.height() < 8) out.push_back(strf("%s: height must be >= 8, got %d", what.c_str(), img.height()));
  if (img.width() < 8) out.push_back(strf("%s: width must be >= 8, got %d", what.c_str(), img.width()));
  for (double v : img.data.v) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      out.push_back(what + ": values must be finite and within [0,1]");
      break;
    }
  }
  return out;
}

std::vector<std::string> validate_head_box(const HeadBox& box, const std::string& what) {
  std::vector<std::string> out;
  if (!(box.x_min >= 0.0 && box.x_min < box.x_max && box.x_max <= 1.0))
    out.push_back(strf("%s: x ordering violated, need 0 <= x_min < x_max <= 1 (got %g, %g)",
                       what.c_str(), box.x_min, box.x_max));
  if (!(box.y_min >= 0.0 && box.y_min < box.y_max && box.y_max <= 1.0))
    out.push_back(strf("%s: y ordering violated, need 0 <= y_min < y_max <= 1 (got %g, %g)",
                       what.c_str(), box.y_min, box.y_max));
  if (out.empty() && box.width() * box.height() <= 0.0)
    out.push_back(what + ": box area must be nonzero");
  return out;
}

std::vector<std::string> validate_annotation(const GazeAnnotation& ann, const std::string& what) {
  std::vector<std::string> out;
  if (ann.is_inside() && ann.points.empty())
    out.push_back(what + ": points must be non-empty when gaze is inside the frame");
  for (size_t i = 0; i < ann.points.size(); ++i) {
    const auto& p = ann.points[i];
    if (!(std::isfinite(p.x) && p.x >= 0.0 && p.x <= 1.0))
      out.push_back(strf("%s: points[%zu].x out of range [0,1] (got %g)", what.c_str(), i, p.x));
    if (!(std::isfinite(p.y) && p.y >= 0.0 && p.y <= 1.0))
      out.push_back(strf("%s: points[%zu].y out of range [0,1] (got %g)", what.c_str(), i, p.y));
  }
  return out;
}

std::vector<std::string> validate_sample(const Sample& sample) {
  std::vector<std::string> out;
  auto append = [&out](std::vector<std::string> xs) {
    out.insert(out.end(), xs.begin(), xs.end());
  };
  append(validate_image_plane(sample.scene, "scene"));
  if (sample.scene.data.rank() == 3 && sample.scene.channels() != 3)
    out.push_back("scene: must have 3 channels");
  append(validate_image_plane(sample.depth, "depth"));
  if (sample.depth.data.rank() == 3 && sample.depth.channels() != 1)
    out.push_back("depth: must have 1 channel");
  if (sample.scene.data.rank() == 3 && sample.depth.data.rank() == 3 &&
      (sample.scene.height() != sample.depth.height() ||
       sample.scene.width() != sample.depth.width()))
    out.push_back(strf("scene/depth shape mismatch: scene %dx%d vs depth %dx%d",
                       sample.scene.height(), sample.scene.width(), sample.depth.height(),
                       sample.depth.width()));
  append(validate_head_box(sample.head_box, "head_box"));
  append(validate_annotation(sample.annotation, "annotation"));
  return out;
}

std::vector<std::string> ModelConfig::validate() const {
  std::vector<std::string> out;
  if (input_size < 32 || input_size % 32 != 0)
    out.push_back(strf("model.input_size: must be a positive multiple of 32, got %d", input_size));
  if (heatmap_size < 8)
    out.push_back(strf("model.heatmap_size: must be >= 8, got %d", heatmap_size));
  if (backbone_channels < 4)
    out.push_back(strf("model.backbone_channels: must be >= 4, got %d", backbone_channels));
  if (!(grl_lambda >= 0.0) || !std::isfinite(grl_lambda))
    out.push_back("model.grl_lambda: must be a finite nonnegative real");
  return out;
}

}  // namespace gf
