#include "gazefusion/viz.hpp"

#include <algorithm>
#include <cmath>

#include "gazefusion/preprocess.hpp"

namespace gf {

ImagePlane render_overlay(const ImagePlane& scene, const HeatmapGrid& heatmap,
                          const HeadBox& box) {
  const int H = scene.height(), W = scene.width();
  ImagePlane out(3, H, W);
  Tensor hm3({1, heatmap.height(), heatmap.width()});
  hm3.v = heatmap.data.v;
  Tensor up = bilinear_resize(hm3, H, W);

  double lo = up.v[0], hi = up.v[0];
  for (double v : up.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;

  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double a = 0.55 * (up.at(0, y, x) - lo) / span;
      const double base_r = scene.channels() == 3 ? scene.at(0, y, x) : scene.at(0, y, x);
      const double base_g = scene.channels() == 3 ? scene.at(1, y, x) : scene.at(0, y, x);
      const double base_b = scene.channels() == 3 ? scene.at(2, y, x) : scene.at(0, y, x);
      out.at(0, y, x) = std::clamp((1 - a) * base_r + a * 1.0, 0.0, 1.0);
      out.at(1, y, x) = std::clamp((1 - a) * base_g + a * 0.15, 0.0, 1.0);
      out.at(2, y, x) = std::clamp((1 - a) * base_b + a * 0.05, 0.0, 1.0);
    }

  // green head box outline
  const int x0 = std::clamp(static_cast<int>(box.x_min * W), 0, W - 1);
  const int x1 = std::clamp(static_cast<int>(box.x_max * W) - 1, 0, W - 1);
  const int y0 = std::clamp(static_cast<int>(box.y_min * H), 0, H - 1);
  const int y1 = std::clamp(static_cast<int>(box.y_max * H) - 1, 0, H - 1);
  auto green = [&out](int y, int x) {
    out.at(0, y, x) = 0.0;
    out.at(1, y, x) = 0.95;
    out.at(2, y, x) = 0.1;
  };
  for (int x = x0; x <= x1; ++x) {
    green(y0, x);
    green(y1, x);
  }
  for (int y = y0; y <= y1; ++y) {
    green(y, x0);
    green(y, x1);
  }

  // cross at the argmax (same point avg_distance scores)
  const PredictedPoint pp = predicted_point(heatmap);
  const int mx = std::clamp(static_cast<int>(std::lround(pp.x * (W - 1))), 0, W - 1);
  const int my = std::clamp(static_cast<int>(std::lround(pp.y * (H - 1))), 0, H - 1);
  const int arm = std::max(2, W / 32);
  auto white = [&out](int y, int x) {
    out.at(0, y, x) = 1.0;
    out.at(1, y, x) = 1.0;
    out.at(2, y, x) = 1.0;
  };
  for (int d = -arm; d <= arm; ++d) {
    if (mx + d >= 0 && mx + d < W) white(my, mx + d);
    if (my + d >= 0 && my + d < H) white(my + d, mx);
  }
  return out;
}

ImagePlane render_curve_plot(const std::vector<double>& values, int width, int height) {
  ImagePlane img(3, height, width);
  for (auto& v : img.data.v) v = 1.0;
  if (values.empty()) return img;

  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  const int m = 24;  // margin

  auto put = [&img, height, width](int y, int x, double r, double g, double b) {
    if (y < 0 || y >= height || x < 0 || x >= width) return;
    img.at(0, y, x) = r;
    img.at(1, y, x) = g;
    img.at(2, y, x) = b;
  };
  for (int x = m; x < width - m; ++x) put(height - m, x, 0.6, 0.6, 0.6);
  for (int y = m; y < height - m; ++y) put(y, m, 0.6, 0.6, 0.6);

  auto px = [&](size_t i) {
    return m + static_cast<int>((width - 2.0 * m) * (values.size() == 1 ? 0.5 : static_cast<double>(i) / (values.size() - 1)));
  };
  auto py = [&](double v) {
    return height - m - static_cast<int>((height - 2.0 * m) * (v - lo) / span);
  };
  for (size_t i = 0; i + 1 < values.size(); ++i) {
    const int ax = px(i), ay = py(values[i]);
    const int bx = px(i + 1), by = py(values[i + 1]);
    const int steps = std::max(std::abs(bx - ax), std::abs(by - ay)) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      put(static_cast<int>(std::lround(ay + t * (by - ay))),
          static_cast<int>(std::lround(ax + t * (bx - ax))), 0.1, 0.25, 0.8);
    }
  }
  return img;
}

}  // namespace gf
