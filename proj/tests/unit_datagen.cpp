#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gazefusion/datagen.hpp"
#include "gazefusion/io.hpp"
#include "test_util.hpp"

using namespace gf;
namespace fs = std::filesystem;

namespace {

SynthSpec base_spec() {
  SynthSpec spec;
  spec.image_size = 64;
  spec.n_samples = 40;
  spec.seed = 2024;
  spec.distractor_count = 2;
  return spec;
}

double deg(double rad) { return rad * 180.0 / M_PI; }

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "gf_datagen_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("generator is deterministic in the spec") {
  const SynthSpec spec = base_spec();
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sample_id == b[i].sample_id);
    CHECK(a[i].scene.data.v == b[i].scene.data.v);
    CHECK(a[i].depth.data.v == b[i].depth.data.v);
    CHECK(a[i].head_box.x_min == b[i].head_box.x_min);
    CHECK(a[i].annotation.points[0].x == b[i].annotation.points[0].x);
  }
}

TEST_CASE("different seeds give different scenes") {
  SynthSpec s1 = base_spec(), s2 = base_spec();
  s2.seed = 999;
  CHECK(generate_synthetic(s1)[0].scene.data.v != generate_synthetic(s2)[0].scene.data.v);
}

TEST_CASE("100 samples with distractors all pass validate_sample") {
  SynthSpec spec = base_spec();
  spec.n_samples = 100;
  const auto samples = generate_synthetic(spec);
  REQUIRE(samples.size() == 100);
  for (const auto& s : samples) {
    const auto v = validate_sample(s);
    if (!v.empty()) FAIL(s.sample_id, ": ", v.front());
  }
}

TEST_CASE("target sits on the gaze ray within 2 degrees") {
  SynthSpec spec = base_spec();
  spec.n_samples = 60;
  std::vector<SynthMeta> metas;
  const auto samples = generate_synthetic(spec, &metas);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& m = metas[i];
    const double dx = m.target_x - m.head_x, dy = m.target_y - m.head_y;
    const double ang = std::atan2(dy, dx);
    double diff = std::fabs(ang - m.theta);
    while (diff > M_PI) diff = std::fabs(diff - 2 * M_PI);
    CHECK(deg(diff) < 2.0);

    // annotation agrees with the meta position on the (W-1) lattice scale
    const double W1 = spec.image_size - 1;
    CHECK(samples[i].annotation.points[0].x == doctest::Approx(m.target_x / W1).epsilon(1e-12));
  }
}

TEST_CASE("off-ray distractors stay at least 5 degrees off the ray") {
  SynthSpec spec = base_spec();
  spec.n_samples = 80;
  spec.distractor_count = 3;
  std::vector<SynthMeta> metas;
  generate_synthetic(spec, &metas);
  int checked = 0;
  for (const auto& m : metas) {
    for (const auto& d : m.distractors) {
      if (d.on_ray) continue;
      const double ang = std::atan2(d.y - m.head_y, d.x - m.head_x);
      double diff = std::fabs(ang - m.theta);
      while (diff > M_PI) diff = std::fabs(diff - 2 * M_PI);
      CHECK(deg(diff) >= 5.0);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("on-ray distractors sit on the ray at a different depth layer") {
  SynthSpec spec = base_spec();
  spec.n_samples = 80;
  spec.on_ray_distractor_prob = 1.0;
  std::vector<SynthMeta> metas;
  const auto samples = generate_synthetic(spec, &metas);
  int with_onray = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& m = metas[i];
    for (const auto& d : m.distractors) {
      if (!d.on_ray) continue;
      ++with_onray;
      const double ang = std::atan2(d.y - m.head_y, d.x - m.head_x);
      double diff = std::fabs(ang - m.theta);
      while (diff > M_PI) diff = std::fabs(diff - 2 * M_PI);
      CHECK(deg(diff) < 1.0);
      CHECK(std::fabs(d.depth - m.target_depth) > 0.1);
      CHECK(samples[i].sample_id.find("_onray") != std::string::npos);
    }
  }
  CHECK(with_onray == 80);  // prob 1.0 guarantees the extra mark
}

TEST_CASE("on-ray probability zero yields no flagged samples") {
  SynthSpec spec = base_spec();
  spec.on_ray_distractor_prob = 0.0;
  for (const auto& s : generate_synthetic(spec))
    CHECK(s.sample_id.find("_onray") == std::string::npos);
}

TEST_CASE("head and target occupy distinct depth layers") {
  SynthSpec spec = base_spec();
  std::vector<SynthMeta> metas;
  generate_synthetic(spec, &metas);
  for (const auto& m : metas) CHECK(std::fabs(m.head_depth - m.target_depth) > 0.1);
}

TEST_CASE("style controls the domain label") {
  SynthSpec spec = base_spec();
  spec.n_samples = 1;
  CHECK(generate_synthetic(spec)[0].domain.name == "style_a");
  spec.domain_style = DomainStyle::style_b;
  CHECK(generate_synthetic(spec)[0].domain.name == "style_b");
}

TEST_CASE("synthetic depth provider returns the stored layer map exactly") {
  SynthSpec spec = base_spec();
  spec.n_samples = 5;
  const auto samples = generate_synthetic(spec);
  const auto provider = make_synthetic_depth_provider(samples);
  for (const auto& s : samples) {
    const ImagePlane d = provider->estimate(s.scene);
    CHECK(d.data.v == s.depth.data.v);
  }
}

TEST_CASE("depth provider falls back to luminance pseudo-depth") {
  const auto provider = make_synthetic_depth_provider();
  ImagePlane black(3, 16, 16);
  const ImagePlane d = provider->estimate(black);
  for (double v : d.data.v) CHECK(v == 1.0);  // constant plane for a constant scene

  ImagePlane gradient(3, 16, 16);
  for (int x = 0; x < 16; ++x)
    for (int y = 0; y < 16; ++y)
      for (int c = 0; c < 3; ++c) gradient.at(c, y, x) = x / 15.0;
  const ImagePlane dg = provider->estimate(gradient);
  for (double v : dg.data.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(dg.at(0, 0, 0) > dg.at(0, 0, 15));  // brighter reads as closer
}

TEST_CASE("load_annotations: identity mapping of a hand-written record") {
  const fs::path dir = temp_dir("identity");
  ImagePlane img(3, 16, 16);
  for (auto& v : img.data.v) v = 0.5;
  write_ppm(dir / "img.ppm", img);
  write_file(dir / "ann.jsonl",
             "{\"sample_id\":\"a\",\"image_path\":\"img.ppm\","
             "\"head_box\":[0.1,0.1,0.3,0.3],\"gaze_points\":[[0.5,0.5]],"
             "\"inside_frame\":true,\"domain\":\"style_a\"}\n");
  const auto samples = load_annotations(dir / "ann.jsonl", dir);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].sample_id == "a");
  CHECK(samples[0].head_box.x_min == 0.1);
  CHECK(samples[0].head_box.x_max == 0.3);
  CHECK(samples[0].annotation.points[0].x == 0.5);
  CHECK(samples[0].domain.name == "style_a");
  CHECK(samples[0].depth.height() == 16);  // provider-backed depth
}

TEST_CASE("load_annotations: three records preserve order") {
  const fs::path dir = temp_dir("order");
  ImagePlane img(3, 16, 16);
  write_ppm(dir / "img.ppm", img);
  std::string lines;
  for (int i = 0; i < 3; ++i)
    lines += strf(
        "{\"sample_id\":\"s%d\",\"image_path\":\"img.ppm\","
        "\"head_box\":[0.1,0.1,0.3,0.3],\"gaze_points\":[[0.5,0.5]],"
        "\"domain\":\"d\"}\n",
        i);
  write_file(dir / "ann.jsonl", lines);
  const auto samples = load_annotations(dir / "ann.jsonl", dir);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].sample_id == "s0");
  CHECK(samples[1].sample_id == "s1");
  CHECK(samples[2].sample_id == "s2");
}

TEST_CASE("load_annotations: out-of-range gaze names the field and line") {
  const fs::path dir = temp_dir("range");
  ImagePlane img(3, 16, 16);
  write_ppm(dir / "img.ppm", img);
  write_file(dir / "ann.jsonl",
             "{\"sample_id\":\"a\",\"image_path\":\"img.ppm\","
             "\"head_box\":[0.1,0.1,0.3,0.3],\"gaze_points\":[[1.5,0.5]],"
             "\"domain\":\"d\"}\n");
  try {
    load_annotations(dir / "ann.jsonl", dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("points[0].x out of range") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
}

TEST_CASE("load_annotations: missing image names the path") {
  const fs::path dir = temp_dir("missing");
  write_file(dir / "ann.jsonl",
             "{\"sample_id\":\"a\",\"image_path\":\"nope.ppm\","
             "\"head_box\":[0.1,0.1,0.3,0.3],\"gaze_points\":[[0.5,0.5]],"
             "\"domain\":\"d\"}\n");
  try {
    load_annotations(dir / "ann.jsonl", dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("nope.ppm") != std::string::npos);
  }
}

TEST_CASE("load_annotations: malformed json names the line") {
  const fs::path dir = temp_dir("malformed");
  write_file(dir / "ann.jsonl", "{\"sample_id\": oops}\n");
  try {
    load_annotations(dir / "ann.jsonl", dir);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("save_dataset round-trips through load_annotations bit-exactly") {
  const fs::path dir = temp_dir("roundtrip");
  SynthSpec spec = base_spec();
  spec.n_samples = 6;
  const auto samples = generate_synthetic(spec);
  save_dataset(samples, dir);

  const auto loaded = load_annotations(dir / "annotations.jsonl", dir);
  REQUIRE(loaded.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].sample_id == samples[i].sample_id);
    CHECK(loaded[i].scene.data.v == samples[i].scene.data.v);  // 8-bit grid, exact
    CHECK(loaded[i].depth.data.v == samples[i].depth.data.v);  // f64 npy, exact
    CHECK(loaded[i].head_box.x_min == samples[i].head_box.x_min);
    CHECK(loaded[i].head_box.y_max == samples[i].head_box.y_max);
    CHECK(loaded[i].annotation.points[0].x == samples[i].annotation.points[0].x);
    CHECK(loaded[i].annotation.points[0].y == samples[i].annotation.points[0].y);
    CHECK(loaded[i].domain.name == samples[i].domain.name);
  }
}

TEST_CASE("spec validation rejects bad values") {
  SynthSpec spec = base_spec();
  spec.image_size = 16;
  CHECK(!spec.validate().empty());
  spec = base_spec();
  spec.n_samples = 0;
  CHECK(!spec.validate().empty());
  spec = base_spec();
  spec.on_ray_distractor_prob = 1.5;
  CHECK(!spec.validate().empty());
}
