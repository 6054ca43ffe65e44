#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "gazefusion/io.hpp"
#include "gazefusion/viz.hpp"
#include "test_util.hpp"

using namespace gf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / "gf_io_tests";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("ppm round-trips 8-bit-quantized images exactly") {
  Rng rng(1);
  ImagePlane img(3, 19, 23);
  for (auto& v : img.data.v) v = rng.uniform_int(256) / 255.0;
  const fs::path p = temp_dir() / "rt.ppm";
  write_ppm(p, img);
  const ImagePlane back = read_ppm(p);
  CHECK(back.channels() == 3);
  CHECK(back.height() == 19);
  CHECK(back.width() == 23);
  CHECK(back.data.v == img.data.v);
}

TEST_CASE("pgm (single channel) round-trips") {
  ImagePlane img(1, 8, 8);
  for (int i = 0; i < 64; ++i) img.data.v[static_cast<size_t>(i)] = (i % 256) / 255.0;
  const fs::path p = temp_dir() / "rt.pgm";
  write_ppm(p, img);
  const ImagePlane back = read_ppm(p);
  CHECK(back.channels() == 1);
  CHECK(back.data.v == img.data.v);
}

TEST_CASE("npy round-trips doubles bit-exactly and rejects junk") {
  Rng rng(2);
  Tensor t({3, 5, 7});
  for (auto& v : t.v) v = rng.normal();
  const fs::path p = temp_dir() / "t.npy";
  write_npy(p, t);
  const Tensor back = read_npy(p);
  CHECK(back.shape == t.shape);
  CHECK(back.v == t.v);

  const fs::path junk = temp_dir() / "junk.npy";
  write_file(junk, "not an npy");
  CHECK_THROWS_AS(read_npy(junk), Error);
}

TEST_CASE("npy 1-d vectors round-trip") {
  Tensor t({4});
  t.v = {1.5, -2.25, 0.0, 1e-300};
  const fs::path p = temp_dir() / "v.npy";
  write_npy(p, t);
  const Tensor back = read_npy(p);
  CHECK(back.shape == t.shape);
  CHECK(back.v == t.v);
}

TEST_CASE("file digests are stable and content-sensitive") {
  const fs::path a = temp_dir() / "a.txt";
  const fs::path b = temp_dir() / "b.txt";
  write_file(a, "hello");
  write_file(b, "hello");
  CHECK(file_digest(a) == file_digest(b));
  write_file(b, "hellp");
  CHECK(file_digest(a) != file_digest(b));
}

TEST_CASE("read_file errors name the path") {
  try {
    read_file(temp_dir() / "missing_file.bin");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("missing_file.bin") != std::string::npos);
  }
}

TEST_CASE("overlay keeps the scene dimensions and marks the argmax") {
  ImagePlane scene(3, 48, 48);
  for (auto& v : scene.data.v) v = 0.2;
  HeatmapGrid hm(64);
  hm.data.at(32, 48) = 1.0;
  const ImagePlane overlay = render_overlay(scene, hm, HeadBox{0.1, 0.1, 0.3, 0.3});
  CHECK(overlay.height() == 48);
  CHECK(overlay.width() == 48);
  // head box outline is green
  CHECK(overlay.at(1, 5, 5) > 0.9);
  // marker cross is white at the scaled argmax
  const int mx = static_cast<int>(std::lround(48.0 / 63.0 * 47.0));
  const int my = static_cast<int>(std::lround(32.0 / 63.0 * 47.0));
  CHECK(overlay.at(0, my, mx) == 1.0);
  CHECK(overlay.at(1, my, mx) == 1.0);
}

TEST_CASE("curve plot renders at the requested size") {
  const ImagePlane plot = render_curve_plot({1.0, 0.5, 0.25, 0.12}, 200, 120);
  CHECK(plot.height() == 120);
  CHECK(plot.width() == 200);
  bool any_blue = false;
  for (int y = 0; y < 120 && !any_blue; ++y)
    for (int x = 0; x < 200 && !any_blue; ++x)
      if (plot.at(2, y, x) > 0.7 && plot.at(0, y, x) < 0.3) any_blue = true;
  CHECK(any_blue);
}
