#pragma once

#include <filesystem>
#include <memory>
#include <span>

#include "gazefusion/core_types.hpp"

namespace gf {

enum class DomainStyle { style_a, style_b };

const char* to_string(DomainStyle s);

struct SynthSpec {
  int image_size = 64;
  int n_samples = 1;
  uint64_t seed = 0;
  DomainStyle domain_style = DomainStyle::style_a;
  int distractor_count = 2;
  // Probability of one extra distractor placed exactly on the gaze ray at a
  // different depth layer; such samples carry an "_onray" id suffix.
  double on_ray_distractor_prob = 0.5;

  std::vector<std::string> validate() const;
};

// Geometry the generator used for one sample, in pixel coordinates. Exposed
// so property tests can check ray/distractor placement directly.
struct SynthMeta {
  double head_x = 0, head_y = 0;
  double theta = 0;  // gaze direction, radians
  double target_x = 0, target_y = 0;
  struct Marker {
    double x = 0, y = 0;
    double depth = 0;
    bool on_ray = false;
  };
  std::vector<Marker> distractors;
  double head_depth = 0, target_depth = 0;
};

std::vector<Sample> generate_synthetic(const SynthSpec& spec);
std::vector<Sample> generate_synthetic(const SynthSpec& spec, std::vector<SynthMeta>* metas);

class DepthProvider {
 public:
  virtual ~DepthProvider() = default;
  virtual ImagePlane estimate(const ImagePlane& scene) const = 0;
};

// Luminance pseudo-depth (1 - luma). Non-physical; a stand-in when no real
// depth is available.
std::unique_ptr<DepthProvider> make_luminance_depth_provider();

// Returns the generator's own layered depth for scenes it has seen (matched
// by pixel content); falls back to luminance pseudo-depth otherwise.
std::unique_ptr<DepthProvider> make_synthetic_depth_provider(std::span<const Sample> known = {});

// Canonical annotation format: UTF-8 JSON, one record per line. Fields:
// sample_id, image_path, depth_path (optional), head_box (4 floats),
// gaze_points (list of [x,y]), inside_frame (optional bool), domain (string).
std::vector<Sample> load_annotations(const std::filesystem::path& file,
                                     const std::filesystem::path& image_root,
                                     const DepthProvider* depth_provider = nullptr);

// Writes images/, depth/ and annotations.jsonl under dir.
void save_dataset(std::span<const Sample> samples, const std::filesystem::path& dir);

}  // namespace gf
