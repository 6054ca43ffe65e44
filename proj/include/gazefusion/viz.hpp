#pragma once

#include "gazefusion/core_types.hpp"
#include "gazefusion/metrics.hpp"

namespace gf {

// Scene with the heatmap alpha-blended, the head box outlined in green and
// the argmax marked. Output matches the scene dimensions.
ImagePlane render_overlay(const ImagePlane& scene, const HeatmapGrid& heatmap,
                          const HeadBox& box);

// Simple line plot of per-epoch values (loss curves).
ImagePlane render_curve_plot(const std::vector<double>& values, int width = 480,
                             int height = 320);

}  // namespace gf
