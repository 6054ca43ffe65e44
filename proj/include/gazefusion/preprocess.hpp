#pragma once

#include <array>

#include "gazefusion/core_types.hpp"

namespace gf {

// Model-ready tensors for one sample. The extra fields beyond the three main
// tensors carry the channel planes the ablation variants assemble their
// inputs from.
struct ModelInput {
  Tensor scene_plus_mask;  // [4, S, S]: RGB + binary head mask
  Tensor depth_plus_mask;  // [4, S, S]: magma-colored depth + the same mask
  Tensor head_crop;        // [3, S, S]
  Tensor gray_depth;       // [1, S, S]: min-max normalized scalar depth
};

// 256-entry magma colormap; the same values live in data/magma_lut_v1.csv.
const std::array<std::array<double, 3>, 256>& magma_lut();

// Bilinear resample, align-corners=false: src = (dst + 0.5) * scale - 0.5.
Tensor bilinear_resize(const Tensor& img, int out_h, int out_w);

// Binary mask, 1 where the pixel center falls strictly inside the scaled box.
// A box too small to cover any center still gets one pixel at its center.
Tensor render_head_mask(const HeadBox& box, int size);

// Bilinear resize of the boxed region to out_size x out_size.
Tensor crop_head(const ImagePlane& scene, const HeadBox& box, int out_size);

// Per-image min-max normalization to [0,1]; constant planes map to 0.
Tensor normalize_depth(const ImagePlane& depth);

// normalize_depth followed by the magma LUT (index = lround(v * 255)).
Tensor colorize_depth(const ImagePlane& depth);

// Isotropic Gaussian (sigma = 3 * grid / 64) with peak exactly 1 at the pixel
// nearest the mean annotation point; the lattice maps pixel i to coordinate
// i / (grid - 1).
HeatmapGrid render_gt_heatmap(const GazeAnnotation& annotation, int grid);

double heatmap_sigma(int grid);

ModelInput build_model_input(const Sample& sample, const ModelConfig& config);

}  // namespace gf
