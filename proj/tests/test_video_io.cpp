#include <catch2/catch.hpp>
#include <filesystem>

#include "oracles.hpp"
#include "stv/util.hpp"
#include "stv/video_io.hpp"

using namespace stv;
namespace fsys = std::filesystem;

namespace {

fsys::path temp_dir(const std::string& name) {
  fsys::path dir = fsys::temp_directory_path() / ("stv_test_" + name);
  fsys::remove_all(dir);
  fsys::create_directories(dir);
  return dir;
}

void write_gray_pgm(const fsys::path& p, int w, int h, uint8_t v) {
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) +
                    "\n255\n";
  out.append(size_t(w) * h, char(v));
  atomic_write_file(p, out);
}

}  // namespace

TEST_CASE("image sequence of solid gray frames", "[video_io]") {
  auto dir = temp_dir("gray_seq");
  for (int i = 0; i < 10; ++i)
    write_gray_pgm(dir / ("f" + std::to_string(i) + ".pgm"), 8, 8, 128);

  const Clip c = load_clip(dir, ClipFormat::image_sequence);
  REQUIRE(c.width() == 8);
  REQUIRE(c.height() == 8);
  REQUIRE(c.frames() == 10);
  for (size_t i = 0; i < c.r.size(); ++i) {
    REQUIRE(c.r.data()[i] == 128.0 / 255.0);
    REQUIRE(c.g.data()[i] == 128.0 / 255.0);
    REQUIRE(c.b.data()[i] == 128.0 / 255.0);
  }
}

TEST_CASE("dimension mismatch names the offending frame", "[video_io]") {
  auto dir = temp_dir("mismatch");
  write_gray_pgm(dir / "a.pgm", 8, 8, 10);
  write_gray_pgm(dir / "b.pgm", 9, 8, 10);
  try {
    load_clip(dir, ClipFormat::image_sequence);
    FAIL("expected a dimension mismatch error");
  } catch (const std::exception& e) {
    REQUIRE(std::string(e.what()).find("frame 2") != std::string::npos);
  }
}

TEST_CASE("missing path and unsupported depth are reported", "[video_io]") {
  REQUIRE_THROWS(load_clip("/nonexistent/clip", ClipFormat::image_sequence));
  auto dir = temp_dir("depth");
  std::string deep = "P5\n2 2\n65535\n";
  deep.append(8, char(0));
  atomic_write_file(dir / "a.pgm", deep);
  try {
    load_clip(dir, ClipFormat::image_sequence);
    FAIL("expected an unsupported-depth error");
  } catch (const std::exception& e) {
    REQUIRE(std::string(e.what()).find("pixel depth") != std::string::npos);
  }
}

TEST_CASE("y4m: single white frame, C444 and C420", "[video_io]") {
  auto dir = temp_dir("y4m");
  for (bool c444 : {true, false}) {
    const auto path = dir / (c444 ? "w444.y4m" : "w420.y4m");
    atomic_write_file(path, oracle::y4m_bytes(4, 4, 1, c444, 235, 128, 128));
    const Clip c = load_clip(path, ClipFormat::y4m);
    REQUIRE(c.frames() == 1);
    REQUIRE(c.width() == 4);
    for (size_t i = 0; i < c.r.size(); ++i) {
      REQUIRE(c.r.data()[i] == Approx(1.0).margin(1e-12));
      REQUIRE(c.g.data()[i] == Approx(1.0).margin(1e-12));
      REQUIRE(c.b.data()[i] == Approx(1.0).margin(1e-12));
    }
  }
  // black level and frame count
  const auto path = dir / "black.y4m";
  atomic_write_file(path, oracle::y4m_bytes(4, 2, 3, true, 16, 128, 128));
  const Clip c = load_clip(path, ClipFormat::y4m);
  REQUIRE(c.frames() == 3);
  for (size_t i = 0; i < c.r.size(); ++i)
    REQUIRE(c.r.data()[i] == Approx(0.0).margin(1e-12));
}

TEST_CASE("grayscale conversion", "[video_io]") {
  Clip white{"w", {}, ScalarVolume(3, 3, 3, 1.0), ScalarVolume(3, 3, 3, 1.0),
             ScalarVolume(3, 3, 3, 1.0)};
  const ScalarVolume gw = to_grayscale(white);
  for (double v : gw.data()) REQUIRE(v == Approx(1.0).margin(1e-12));

  Clip red{"r", {}, ScalarVolume(3, 3, 3, 1.0), ScalarVolume(3, 3, 3, 0.0),
           ScalarVolume(3, 3, 3, 0.0)};
  const ScalarVolume gr = to_grayscale(red);
  for (double v : gr.data()) REQUIRE(v == 0.299);

  // element-wise oracle on a random clip
  SplitMix64 rng(9);
  Clip rc{"rc", {}, oracle::random_volume(4, 5, 3, rng),
          oracle::random_volume(4, 5, 3, rng),
          oracle::random_volume(4, 5, 3, rng)};
  const ScalarVolume g = to_grayscale(rc);
  for (size_t i = 0; i < g.size(); ++i)
    REQUIRE(g.data()[i] == Approx(0.299 * rc.r.data()[i] +
                                  0.587 * rc.g.data()[i] +
                                  0.114 * rc.b.data()[i])
                               .margin(1e-15));

  // gray clip maps to its own value
  Clip gray{"g", {}, ScalarVolume(2, 2, 2, 0.4), ScalarVolume(2, 2, 2, 0.4),
            ScalarVolume(2, 2, 2, 0.4)};
  const ScalarVolume gg = to_grayscale(gray);
  for (double v : gg.data()) REQUIRE(v == Approx(0.4).margin(1e-12));
}

TEST_CASE("plane split round-trips the clip exactly", "[video_io]") {
  SplitMix64 rng(17);
  Clip c{"c", {}, oracle::random_volume(5, 4, 3, rng),
         oracle::random_volume(5, 4, 3, rng),
         oracle::random_volume(5, 4, 3, rng)};
  const RgbPlanes p = rgb_planes(c);
  REQUIRE(p.r.data() == c.r.data());
  REQUIRE(p.g.data() == c.g.data());
  REQUIRE(p.b.data() == c.b.data());

  Clip blue{"b", {}, ScalarVolume(2, 2, 2, 0.0), ScalarVolume(2, 2, 2, 0.0),
            ScalarVolume(2, 2, 2, 1.0)};
  const RgbPlanes bp = rgb_planes(blue);
  for (double v : bp.r.data()) REQUIRE(v == 0.0);
  for (double v : bp.b.data()) REQUIRE(v == 1.0);
}

TEST_CASE("manifest round trip and validation", "[video_io]") {
  auto dir = temp_dir("manifest");
  std::vector<ManifestEntry> entries(2);
  entries[0].clip_path = "clip_a";
  entries[0].label = "run";
  entries[0].train = true;
  entries[1].clip_path = "clip_b";
  entries[1].label = "sit";
  entries[1].train = false;
  write_manifest(dir / "manifest.tsv", entries);

  const auto back = read_manifest(dir / "manifest.tsv");
  REQUIRE(back.size() == 2);
  REQUIRE(back[0].label == "run");
  REQUIRE(back[0].train);
  REQUIRE_FALSE(back[1].train);
  REQUIRE(back[1].resolved == dir / "clip_b");

  atomic_write_file(dir / "bad.tsv", "x\ty\tneither\n");
  REQUIRE_THROWS(read_manifest(dir / "bad.tsv"));
}
