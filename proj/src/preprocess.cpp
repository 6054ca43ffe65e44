#include "gazefusion/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace gf {

Tensor bilinear_resize(const Tensor& img, int out_h, int out_w) {
  GF_CHECK(img.rank() == 3, "bilinear_resize expects [c,h,w]");
  const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
  Tensor out({C, out_h, out_w});
  const double sy = static_cast<double>(H) / out_h;
  const double sx = static_cast<double>(W) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(H - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, H - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(W - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, W - 1);
      const double wx = fx - x0;
      for (int c = 0; c < C; ++c) {
        const double a = img.at(c, y0, x0) * (1.0 - wx) + img.at(c, y0, x1) * wx;
        const double b = img.at(c, y1, x0) * (1.0 - wx) + img.at(c, y1, x1) * wx;
        out.at(c, oy, ox) = a * (1.0 - wy) + b * wy;
      }
    }
  }
  return out;
}

Tensor render_head_mask(const HeadBox& box, int size) {
  Tensor mask({size, size});
  const double x0 = box.x_min * size, x1 = box.x_max * size;
  const double y0 = box.y_min * size, y1 = box.y_max * size;
  bool any = false;
  for (int y = 0; y < size; ++y) {
    const double cy = y + 0.5;
    if (cy <= y0 || cy >= y1) continue;
    for (int x = 0; x < size; ++x) {
      const double cx = x + 0.5;
      if (cx > x0 && cx < x1) {
        mask.at(y, x) = 1.0;
        any = true;
      }
    }
  }
  if (!any) {
    const int cx = std::clamp(static_cast<int>(box.center_x() * size), 0, size - 1);
    const int cy = std::clamp(static_cast<int>(box.center_y() * size), 0, size - 1);
    mask.at(cy, cx) = 1.0;
  }
  return mask;
}

Tensor crop_head(const ImagePlane& scene, const HeadBox& box, int out_size) {
  const int C = scene.channels(), H = scene.height(), W = scene.width();
  const double bx = box.x_min * W, bw = box.width() * W;
  const double by = box.y_min * H, bh = box.height() * H;
  Tensor out({C, out_size, out_size});
  for (int oy = 0; oy < out_size; ++oy) {
    double fy = by + (oy + 0.5) * bh / out_size - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(H - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, H - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_size; ++ox) {
      double fx = bx + (ox + 0.5) * bw / out_size - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(W - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, W - 1);
      const double wx = fx - x0;
      for (int c = 0; c < C; ++c) {
        const double a = scene.at(c, y0, x0) * (1.0 - wx) + scene.at(c, y0, x1) * wx;
        const double b = scene.at(c, y1, x0) * (1.0 - wx) + scene.at(c, y1, x1) * wx;
        out.at(c, oy, ox) = a * (1.0 - wy) + b * wy;
      }
    }
  }
  return out;
}

Tensor normalize_depth(const ImagePlane& depth) {
  GF_CHECK(depth.channels() == 1, "normalize_depth expects a 1-channel plane");
  const int H = depth.height(), W = depth.width();
  double lo = depth.data.v[0], hi = depth.data.v[0];
  for (double v : depth.data.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor out({1, H, W});
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (int64_t i = 0; i < out.numel(); ++i)
      out.v[static_cast<size_t>(i)] = (depth.data.v[static_cast<size_t>(i)] - lo) * inv;
  }
  // constant plane stays all-zero
  return out;
}

Tensor colorize_depth(const ImagePlane& depth) {
  const Tensor norm = normalize_depth(depth);
  const int H = depth.height(), W = depth.width();
  const auto& lut = magma_lut();
  Tensor out({3, H, W});
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double v = norm.at(0, y, x);
      const int idx = std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
      out.at(0, y, x) = lut[static_cast<size_t>(idx)][0];
      out.at(1, y, x) = lut[static_cast<size_t>(idx)][1];
      out.at(2, y, x) = lut[static_cast<size_t>(idx)][2];
    }
  }
  return out;
}

double heatmap_sigma(int grid) { return 3.0 * grid / 64.0; }

HeatmapGrid render_gt_heatmap(const GazeAnnotation& annotation, int grid) {
  GF_CHECK(!annotation.points.empty(), "render_gt_heatmap: annotation has no points");
  const GazePoint p = annotation.mean_point();
  const int cx = std::clamp(static_cast<int>(std::lround(p.x * (grid - 1))), 0, grid - 1);
  const int cy = std::clamp(static_cast<int>(std::lround(p.y * (grid - 1))), 0, grid - 1);
  const double sigma = heatmap_sigma(grid);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  HeatmapGrid hm(grid);
  for (int y = 0; y < grid; ++y) {
    for (int x = 0; x < grid; ++x) {
      const double d2 = static_cast<double>((y - cy) * (y - cy) + (x - cx) * (x - cx));
      hm.data.at(y, x) = std::exp(-d2 * inv2s2);
    }
  }
  return hm;
}

ModelInput build_model_input(const Sample& sample, const ModelConfig& config) {
  auto violations = validate_sample(sample);
  GF_CHECK(violations.empty(), "build_model_input: invalid sample '%s': %s",
           sample.sample_id.c_str(), violations.front().c_str());
  const int S = config.input_size;

  const Tensor scene = bilinear_resize(sample.scene.data, S, S);
  const Tensor mask = render_head_mask(sample.head_box, S);
  const Tensor colored = bilinear_resize(colorize_depth(sample.depth), S, S);
  const Tensor gray = bilinear_resize(normalize_depth(sample.depth), S, S);

  ModelInput in;
  in.scene_plus_mask = Tensor({4, S, S});
  in.depth_plus_mask = Tensor({4, S, S});
  in.head_crop = crop_head(sample.scene, sample.head_box, S);
  in.gray_depth = gray;

  const size_t plane = static_cast<size_t>(S) * S;
  std::copy(scene.v.begin(), scene.v.end(), in.scene_plus_mask.v.begin());
  std::copy(mask.v.begin(), mask.v.end(), in.scene_plus_mask.v.begin() + 3 * plane);
  std::copy(colored.v.begin(), colored.v.end(), in.depth_plus_mask.v.begin());
  std::copy(mask.v.begin(), mask.v.end(), in.depth_plus_mask.v.begin() + 3 * plane);
  return in;
}

}  // namespace gf
