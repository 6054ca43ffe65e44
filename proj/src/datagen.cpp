#include "gazefusion/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gazefusion/io.hpp"
#include "nlohmann/json.hpp"

namespace gf {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* to_string(DomainStyle s) {
  return s == DomainStyle::style_a ? "style_a" : "style_b";
}

std::vector<std::string> SynthSpec::validate() const {
  std::vector<std::string> out;
  if (image_size < 32) out.push_back(strf("synth.image_size: must be >= 32, got %d", image_size));
  if (n_samples < 1) out.push_back(strf("synth.n_samples: must be >= 1, got %d", n_samples));
  if (distractor_count < 0) out.push_back("synth.distractor_count: must be >= 0");
  if (on_ray_distractor_prob < 0.0 || on_ray_distractor_prob > 1.0)
    out.push_back("synth.on_ray_distractor_prob: must be within [0,1]");
  return out;
}

namespace {

struct StyleParams {
  double bg_base[3];
  double bg_gradient;    // amplitude of the smooth shading
  double noise_amp;      // per-pixel texture noise
  double head_disc[3];
  double head_wedge[3];
  double marker[3];
};

StyleParams style_params(DomainStyle s) {
  if (s == DomainStyle::style_a) {
    return StyleParams{{0.16, 0.18, 0.22}, 0.08, 0.015,
                       {0.82, 0.78, 0.70}, {0.04, 0.04, 0.06},
                       {0.95, 0.93, 0.88}};
  }
  // style_b: same polarity as style_a but shifted palette, brighter warmer
  // background, cooler markers, and much stronger texture noise
  return StyleParams{{0.34, 0.26, 0.20}, 0.12, 0.05,
                     {0.68, 0.72, 0.88}, {0.10, 0.08, 0.10},
                     {0.72, 0.86, 0.97}};
}

double coverage(double dist, double radius) {
  // soft-edged disc: full inside, linear falloff over one pixel
  return std::clamp(radius - dist + 0.5, 0.0, 1.0);
}

void stamp_disc(Tensor& img, double cx, double cy, double radius, const double rgb[3]) {
  const int H = img.dim(1), W = img.dim(2);
  const int y0 = std::max(0, static_cast<int>(cy - radius - 1));
  const int y1 = std::min(H - 1, static_cast<int>(cy + radius + 1));
  const int x0 = std::max(0, static_cast<int>(cx - radius - 1));
  const int x1 = std::min(W - 1, static_cast<int>(cx + radius + 1));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      const double a = coverage(d, radius);
      if (a <= 0.0) continue;
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = (1.0 - a) * img.at(c, y, x) + a * rgb[c];
    }
}

void stamp_disc_value(Tensor& plane, double cx, double cy, double radius, double value) {
  const int H = plane.dim(0), W = plane.dim(1);
  const int y0 = std::max(0, static_cast<int>(cy - radius - 1));
  const int y1 = std::min(H - 1, static_cast<int>(cy + radius + 1));
  const int x0 = std::max(0, static_cast<int>(cx - radius - 1));
  const int x1 = std::min(W - 1, static_cast<int>(cx + radius + 1));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (std::hypot(x - cx, y - cy) <= radius) plane.at(y, x) = value;
}

// Wedge: a tapered bar from the disc edge outward along theta. Its tip marks
// the gaze direction.
void stamp_wedge(Tensor& img, double cx, double cy, double theta, double r_in, double r_out,
                 double half_width, const double rgb[3]) {
  const int H = img.dim(1), W = img.dim(2);
  const double ux = std::cos(theta), uy = std::sin(theta);
  const int pad = static_cast<int>(r_out + 2);
  const int y0 = std::max(0, static_cast<int>(cy) - pad);
  const int y1 = std::min(H - 1, static_cast<int>(cy) + pad);
  const int x0 = std::max(0, static_cast<int>(cx) - pad);
  const int x1 = std::min(W - 1, static_cast<int>(cx) + pad);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double along = dx * ux + dy * uy;
      if (along < r_in * 0.2 || along > r_out) continue;
      const double perp = std::fabs(-dx * uy + dy * ux);
      const double w_here = half_width * (1.0 - 0.6 * (along / r_out));  // tapers to the tip
      const double a = std::clamp(w_here - perp + 0.5, 0.0, 1.0);
      if (a <= 0.0) continue;
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = (1.0 - a) * img.at(c, y, x) + a * rgb[c];
    }
}

void stamp_wedge_depth(Tensor& plane, double cx, double cy, double theta, double r_in,
                       double r_out, double half_width, double value) {
  const int H = plane.dim(0), W = plane.dim(1);
  const double ux = std::cos(theta), uy = std::sin(theta);
  const int pad = static_cast<int>(r_out + 2);
  const int y0 = std::max(0, static_cast<int>(cy) - pad);
  const int y1 = std::min(H - 1, static_cast<int>(cy) + pad);
  const int x0 = std::max(0, static_cast<int>(cx) - pad);
  const int x1 = std::min(W - 1, static_cast<int>(cx) + pad);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double along = dx * ux + dy * uy;
      if (along < r_in * 0.2 || along > r_out) continue;
      const double perp = std::fabs(-dx * uy + dy * ux);
      const double w_here = half_width * (1.0 - 0.6 * (along / r_out));
      if (perp <= w_here) plane.at(y, x) = value;
    }
}

double angle_between(double ax, double ay, double bx, double by) {
  const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
  const double c = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

Sample render_sample(const SynthSpec& spec, int index, SynthMeta& meta) {
  const int W = spec.image_size;
  Rng rng(splitmix64(spec.seed ^ fnv1a_str(strf("sample:%d", index))));
  const StyleParams sp = style_params(spec.domain_style);

  const double r_head = std::max(3.0, W / 16.0);
  const double wedge_len = 2.4 * r_head;
  const double r_marker = std::max(2.5, W / 21.0);
  const double margin = r_marker + 2.0;

  const bool on_ray_extra = rng.uniform() < spec.on_ray_distractor_prob;

  // geometry: head, ray, target, and (when requested) an on-ray mark; the
  // whole layout is redrawn until everything fits
  const double t_min = wedge_len + 1.8 * r_marker;
  const double min_sep = 3.5 * r_marker;
  double hx = 0, hy = 0, theta = 0, tx = 0, ty = 0;
  double ox = 0, oy = 0;
  bool placed = false;
  for (int attempt = 0; attempt < 512 && !placed; ++attempt) {
    hx = rng.uniform(0.20 * W, 0.80 * W);
    hy = rng.uniform(0.20 * W, 0.80 * W);
    theta = rng.uniform(0.0, 2.0 * M_PI);
    // farthest in-frame point along the ray
    double t_exit = t_min;
    while (t_exit < 2.0 * W) {
      const double px = hx + (t_exit + 1.0) * std::cos(theta);
      const double py = hy + (t_exit + 1.0) * std::sin(theta);
      if (px < margin || px > W - margin || py < margin || py > W - margin) break;
      t_exit += 1.0;
    }
    if (t_exit < (on_ray_extra ? t_min + 2.0 * min_sep : t_min + 2.0)) continue;

    const double t = rng.uniform(t_min, t_exit);
    tx = hx + t * std::cos(theta);
    ty = hy + t * std::sin(theta);
    if (!on_ray_extra) {
      placed = true;
      break;
    }
    for (int k = 0; k < 32 && !placed; ++k) {
      const double t2 = rng.uniform(t_min, t_exit);
      if (std::fabs(t2 - t) < min_sep) continue;
      ox = hx + t2 * std::cos(theta);
      oy = hy + t2 * std::sin(theta);
      placed = true;
    }
  }
  GF_CHECK(placed, "generate_synthetic: no valid target placement for sample %d", index);

  // depth layers (background far, head near, target mid, on-ray layer deep)
  const double jitter = 0.02;
  const double d_bg = 0.93 + rng.uniform(-jitter, jitter);
  const double d_head = 0.22 + rng.uniform(-jitter, jitter);
  const double d_target = 0.50 + rng.uniform(-jitter, jitter);
  const double d_onray = 0.76 + rng.uniform(-jitter, jitter);

  meta.head_x = hx;
  meta.head_y = hy;
  meta.theta = theta;
  meta.target_x = tx;
  meta.target_y = ty;
  meta.head_depth = d_head;
  meta.target_depth = d_target;

  std::vector<SynthMeta::Marker> marks;
  if (on_ray_extra) marks.push_back({ox, oy, d_onray, true});

  // distractors: identical appearance, kept >= 8 degrees off the ray
  const double min_off_angle = 8.0 * M_PI / 180.0;
  for (int d = 0; d < spec.distractor_count; ++d) {
    for (int attempt = 0; attempt < 256; ++attempt) {
      const double mx = rng.uniform(margin, W - margin);
      const double my = rng.uniform(margin, W - margin);
      const double ang = angle_between(std::cos(theta), std::sin(theta), mx - hx, my - hy);
      if (ang < min_off_angle) continue;
      if (std::hypot(mx - tx, my - ty) < min_sep) continue;
      if (std::hypot(mx - hx, my - hy) < wedge_len + 1.8 * r_marker) continue;
      bool clash = false;
      for (const auto& m : marks)
        if (std::hypot(mx - m.x, my - m.y) < min_sep) clash = true;
      if (clash) continue;
      marks.push_back({mx, my, rng.uniform() < 0.5 ? d_target : d_onray, false});
      break;
    }
  }
  meta.distractors = marks;
  const bool has_on_ray = on_ray_extra;

  // scene
  Tensor scene({3, W, W});
  const double gdir = rng.uniform(0.0, 2.0 * M_PI);
  const double gx = std::cos(gdir), gy = std::sin(gdir);
  for (int y = 0; y < W; ++y)
    for (int x = 0; x < W; ++x) {
      const double shade = sp.bg_gradient * ((x * gx + y * gy) / W);
      const double noise = rng.uniform(-sp.noise_amp, sp.noise_amp);
      for (int c = 0; c < 3; ++c)
        scene.at(c, y, x) = std::clamp(sp.bg_base[c] + shade + noise, 0.0, 1.0);
    }

  for (const auto& m : marks) stamp_disc(scene, m.x, m.y, r_marker, sp.marker);
  stamp_disc(scene, tx, ty, r_marker, sp.marker);
  stamp_disc(scene, hx, hy, r_head, sp.head_disc);
  stamp_wedge(scene, hx, hy, theta, r_head, wedge_len, 0.45 * r_head, sp.head_wedge);

  // quantize to the 8-bit grid so PPM round-trips are exact
  for (auto& v : scene.v) v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;

  // layered depth plane
  Tensor depth({W, W}, d_bg);
  for (const auto& m : marks) stamp_disc_value(depth, m.x, m.y, r_marker, m.depth);
  stamp_disc_value(depth, tx, ty, r_marker, d_target);
  stamp_disc_value(depth, hx, hy, r_head, d_head);
  stamp_wedge_depth(depth, hx, hy, theta, r_head, wedge_len, 0.45 * r_head, d_head);

  Sample s;
  s.scene.data = std::move(scene);
  s.depth.data = Tensor({1, W, W});
  s.depth.data.v = depth.v;
  const double box_half = wedge_len + 1.0;
  s.head_box = HeadBox{std::clamp((hx - box_half) / W, 0.0, 1.0),
                       std::clamp((hy - box_half) / W, 0.0, 1.0),
                       std::clamp((hx + box_half) / W, 0.0, 1.0),
                       std::clamp((hy + box_half) / W, 0.0, 1.0)};
  s.annotation.points = {GazePoint{tx / (W - 1), ty / (W - 1)}};
  s.annotation.inside_frame = true;
  s.domain.name = to_string(spec.domain_style);
  s.domain.role = spec.domain_style == DomainStyle::style_a ? DomainRole::source
                                                            : DomainRole::target;
  s.sample_id = strf("s%06d%s", index, has_on_ray ? "_onray" : "");
  return s;
}

}  // namespace

std::vector<Sample> generate_synthetic(const SynthSpec& spec, std::vector<SynthMeta>* metas) {
  const auto violations = spec.validate();
  GF_CHECK(violations.empty(), "generate_synthetic: invalid spec: %s",
           violations.front().c_str());
  std::vector<Sample> out;
  out.reserve(static_cast<size_t>(spec.n_samples));
  if (metas) metas->resize(static_cast<size_t>(spec.n_samples));
  for (int i = 0; i < spec.n_samples; ++i) {
    SynthMeta scratch;
    SynthMeta& meta = metas ? (*metas)[static_cast<size_t>(i)] : scratch;
    out.push_back(render_sample(spec, i, meta));
  }
  return out;
}

std::vector<Sample> generate_synthetic(const SynthSpec& spec) {
  return generate_synthetic(spec, nullptr);
}

namespace {

class LuminanceDepthProvider : public DepthProvider {
 public:
  ImagePlane estimate(const ImagePlane& scene) const override {
    const int H = scene.height(), W = scene.width();
    ImagePlane d(1, H, W);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double luma = scene.channels() == 3
                          ? 0.299 * scene.at(0, y, x) + 0.587 * scene.at(1, y, x) +
                                0.114 * scene.at(2, y, x)
                          : scene.at(0, y, x);
        d.at(0, y, x) = std::clamp(1.0 - luma, 0.0, 1.0);
      }
    return d;
  }
};

class SyntheticDepthProvider : public DepthProvider {
 public:
  explicit SyntheticDepthProvider(std::span<const Sample> known) {
    for (const auto& s : known) {
      const uint64_t key = fnv1a(s.scene.data.v.data(),
                                 s.scene.data.v.size() * sizeof(double));
      known_[key] = s.depth;
    }
  }

  ImagePlane estimate(const ImagePlane& scene) const override {
    const uint64_t key = fnv1a(scene.data.v.data(), scene.data.v.size() * sizeof(double));
    auto it = known_.find(key);
    if (it != known_.end()) return it->second;
    return fallback_.estimate(scene);
  }

 private:
  std::unordered_map<uint64_t, ImagePlane> known_;
  LuminanceDepthProvider fallback_;
};

}  // namespace

std::unique_ptr<DepthProvider> make_luminance_depth_provider() {
  return std::make_unique<LuminanceDepthProvider>();
}

std::unique_ptr<DepthProvider> make_synthetic_depth_provider(std::span<const Sample> known) {
  return std::make_unique<SyntheticDepthProvider>(known);
}

static double json_number(const json& j, const std::string& field, int line_no) {
  GF_CHECK(j.is_number(), "annotations line %d: field %s must be a number", line_no,
           field.c_str());
  return j.get<double>();
}

std::vector<Sample> load_annotations(const fs::path& file, const fs::path& image_root,
                                     const DepthProvider* depth_provider) {
  const std::string content = read_file(file);
  std::vector<Sample> out;
  std::unique_ptr<DepthProvider> fallback;
  int line_no = 0;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(strf("annotations line %d: malformed record: %s", line_no, e.what()));
    }
    auto require = [&rec, line_no](const char* field) -> const json& {
      GF_CHECK(rec.contains(field), "annotations line %d: missing field %s", line_no, field);
      return rec.at(field);
    };

    Sample s;
    s.sample_id = require("sample_id").get<std::string>();

    const fs::path img_path = image_root / require("image_path").get<std::string>();
    GF_CHECK(fs::exists(img_path), "annotations line %d: missing image file %s", line_no,
             img_path.string().c_str());
    s.scene = read_ppm(img_path);
    GF_CHECK(s.scene.channels() == 3, "annotations line %d: image %s must be RGB", line_no,
             img_path.string().c_str());

    const json& hb = require("head_box");
    GF_CHECK(hb.is_array() && hb.size() == 4,
             "annotations line %d: field head_box must be [x_min,y_min,x_max,y_max]", line_no);
    s.head_box = HeadBox{json_number(hb[0], "head_box[0]", line_no),
                         json_number(hb[1], "head_box[1]", line_no),
                         json_number(hb[2], "head_box[2]", line_no),
                         json_number(hb[3], "head_box[3]", line_no)};

    const json& pts = require("gaze_points");
    GF_CHECK(pts.is_array(), "annotations line %d: field gaze_points must be a list", line_no);
    for (const auto& p : pts) {
      GF_CHECK(p.is_array() && p.size() == 2,
               "annotations line %d: gaze_points entries must be [x,y]", line_no);
      s.annotation.points.push_back(GazePoint{json_number(p[0], "gaze_points.x", line_no),
                                              json_number(p[1], "gaze_points.y", line_no)});
    }
    if (rec.contains("inside_frame")) {
      GF_CHECK(rec["inside_frame"].is_boolean(),
               "annotations line %d: field inside_frame must be a boolean", line_no);
      s.annotation.inside_frame = rec["inside_frame"].get<bool>();
    }
    s.domain.name = require("domain").get<std::string>();
    // role is experiment-level, not part of the format; generator-produced
    // style names map back to the roles the generator assigned
    s.domain.role = s.domain.name == to_string(DomainStyle::style_b) ? DomainRole::target
                                                                     : DomainRole::source;

    if (rec.contains("depth_path") && !rec["depth_path"].is_null()) {
      const fs::path dpath = image_root / rec["depth_path"].get<std::string>();
      GF_CHECK(fs::exists(dpath), "annotations line %d: missing depth file %s", line_no,
               dpath.string().c_str());
      if (dpath.extension() == ".npy") {
        Tensor t = read_npy(dpath);
        GF_CHECK(t.rank() == 2, "annotations line %d: depth array must be 2-D", line_no);
        s.depth = ImagePlane(1, t.dim(0), t.dim(1));
        s.depth.data.v = t.v;
      } else {
        s.depth = read_ppm(dpath);
      }
    } else {
      const DepthProvider* prov = depth_provider;
      if (!prov) {
        if (!fallback) fallback = make_luminance_depth_provider();
        prov = fallback.get();
      }
      s.depth = prov->estimate(s.scene);
    }

    auto violations = validate_sample(s);
    if (!violations.empty())
      throw Error(strf("annotations line %d: %s", line_no, violations.front().c_str()));
    out.push_back(std::move(s));
  }
  return out;
}

void save_dataset(std::span<const Sample> samples, const fs::path& dir) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "depth");
  std::string lines;
  for (const auto& s : samples) {
    const std::string img_rel = "images/" + s.sample_id + ".ppm";
    const std::string dep_rel = "depth/" + s.sample_id + ".npy";
    write_ppm(dir / img_rel, s.scene);
    Tensor d2({s.depth.height(), s.depth.width()});
    d2.v = s.depth.data.v;
    write_npy(dir / dep_rel, d2);

    json rec;
    rec["sample_id"] = s.sample_id;
    rec["image_path"] = img_rel;
    rec["depth_path"] = dep_rel;
    rec["head_box"] = {s.head_box.x_min, s.head_box.y_min, s.head_box.x_max, s.head_box.y_max};
    json pts = json::array();
    for (const auto& p : s.annotation.points) pts.push_back({p.x, p.y});
    rec["gaze_points"] = pts;
    if (s.annotation.inside_frame.has_value()) rec["inside_frame"] = *s.annotation.inside_frame;
    rec["domain"] = s.domain.name;
    lines += rec.dump();
    lines += "\n";
  }
  write_file(dir / "annotations.jsonl", lines);
}

}  // namespace gf
