#pragma once

// Deterministic synthetic clip generation: ground truth for detector,
// flow, color and end-to-end tests.
//
// Noise is an achromatic per-pixel offset (the same value added to R, G
// and B), so iso-luminant class pairs stay iso-luminant and per-voxel hue
// is untouched with noise enabled.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stv/util.hpp"
#include "stv/video_io.hpp"
#include "stv/volume.hpp"

namespace stv {

using Rgb = std::array<double, 3>;

struct SynthSpec {
  int width = 64, height = 64, frames = 40;
  double vx = 2.0, vy = 0.0;  // px/frame
  int turnaround = 20;        // frame of direction reversal
  Rgb fg{1.0, 1.0, 1.0};
  Rgb bg{0.0, 0.0, 0.0};
  double start_x = 8.0, start_y = 30.0;  // structure top-left / centre
  int side = 4;                          // moving-corner square side
  double blob_sigma = 2.5;               // translating-blob profile
  double noise_std = 0.0;
  uint64_t seed = 0;
};

struct GroundTruthEvent {
  double x = 0.0, y = 0.0;
  int t = 0;
};

struct MovingCornerClip {
  Clip clip;
  GroundTruthEvent event;
};

namespace detail {

inline void add_gray_noise(Clip& clip, double std_dev, uint64_t seed) {
  if (std_dev <= 0.0) return;
  SplitMix64 rng(seed);
  for (size_t i = 0; i < clip.r.size(); ++i) {
    const double n = std_dev * rng.normal();
    clip.r.data()[i] = std::clamp(clip.r.data()[i] + n, 0.0, 1.0);
    clip.g.data()[i] = std::clamp(clip.g.data()[i] + n, 0.0, 1.0);
    clip.b.data()[i] = std::clamp(clip.b.data()[i] + n, 0.0, 1.0);
  }
}

inline Clip solid_clip(const std::string& id, const SynthSpec& s) {
  Clip c;
  c.id = id;
  c.r = ScalarVolume(s.width, s.height, s.frames, s.bg[0]);
  c.g = ScalarVolume(s.width, s.height, s.frames, s.bg[1]);
  c.b = ScalarVolume(s.width, s.height, s.frames, s.bg[2]);
  return c;
}

}  // namespace detail

// Bright axis-aligned square translating at (vx, vy), reversing direction at
// the turnaround frame. The ground-truth event sits at the square's centre at
// the turnaround (the compact square acts as one corner structure; all its
// physical corners lie within side/sqrt(2) of the centre).
inline MovingCornerClip moving_corner_clip(const SynthSpec& s) {
  if (s.turnaround <= 0 || s.turnaround >= s.frames)
    throw std::invalid_argument("moving_corner_clip: turnaround outside (0,T)");

  auto top_left = [&](int f) {
    const int d = f <= s.turnaround ? f : 2 * s.turnaround - f;
    return std::pair<int, int>{int(std::lround(s.start_x + s.vx * d)),
                               int(std::lround(s.start_y + s.vy * d))};
  };
  for (int f = 0; f < s.frames; ++f) {
    const auto [px, py] = top_left(f);
    if (px < 0 || py < 0 || px + s.side > s.width || py + s.side > s.height)
      throw std::invalid_argument(
          "moving_corner_clip: trajectory exits frame at t=" +
          std::to_string(f));
  }

  MovingCornerClip out;
  out.clip = detail::solid_clip("corner", s);
  for (int f = 0; f < s.frames; ++f) {
    const auto [px, py] = top_left(f);
    for (int y = py; y < py + s.side; ++y)
      for (int x = px; x < px + s.side; ++x) {
        out.clip.r.at(x, y, f) = s.fg[0];
        out.clip.g.at(x, y, f) = s.fg[1];
        out.clip.b.at(x, y, f) = s.fg[2];
      }
  }
  detail::add_gray_noise(out.clip, s.noise_std, s.seed);

  const auto [tx, ty] = top_left(s.turnaround);
  out.event = {tx + (s.side - 1) / 2.0, ty + (s.side - 1) / 2.0, s.turnaround};
  return out;
}

// Gaussian-profile blob translating at a constant (vx, vy); smooth edges keep
// the local-flow brightness-constancy linearization valid.
inline Clip translating_blob_clip(const SynthSpec& s) {
  Clip c = detail::solid_clip("blob", s);
  for (int f = 0; f < s.frames; ++f) {
    const double cx = s.start_x + s.vx * f;
    const double cy = s.start_y + s.vy * f;
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double w = std::exp(-r2 / (2.0 * s.blob_sigma * s.blob_sigma));
        c.r.at(x, y, f) += (s.fg[0] - s.bg[0]) * w;
        c.g.at(x, y, f) += (s.fg[1] - s.bg[1]) * w;
        c.b.at(x, y, f) += (s.fg[2] - s.bg[2]) * w;
      }
  }
  detail::add_gray_noise(c, s.noise_std, s.seed);
  return c;
}

// ---------------------------------------------------------------------------
// Labeled multi-class dataset

struct ActionClassSpec {
  std::string label;
  double vx = 2.0, vy = 0.0;
  int period = 10;  // frames between direction reversals
  Rgb fg{0.45, 0.45, 0.45};
};

// foreground color with the given BT.601 luminance, parametrized by R and B
inline Rgb iso_luminant_color(double luminance, double r, double b) {
  const double g = (luminance - kLumR * r - kLumB * b) / kLumG;
  if (g < 0.0 || g > 1.0)
    throw std::invalid_argument("iso_luminant_color: green out of range");
  return {r, g, b};
}

// Two color-discriminable classes (identical motion + luminance, opposite
// hues) and two motion-discriminable gray classes.
inline std::vector<ActionClassSpec> default_color_action_classes() {
  const double lum = 0.45;
  return {
      {"swing-h-red", 2.0, 0.0, 10, iso_luminant_color(lum, 0.80, 0.20)},
      {"swing-h-green", 2.0, 0.0, 10, iso_luminant_color(lum, 0.20, 0.30)},
      {"swing-v-gray", 0.0, 2.0, 10, {lum, lum, lum}},
      {"swing-d-gray", 1.4142, 1.4142, 10, {lum, lum, lum}},
  };
}

struct LabeledClip {
  Clip clip;
  std::string label;
  bool train = true;
};

struct SynthDataset {
  std::vector<LabeledClip> clips;
};

// Gaussian blob oscillating along (vx, vy) with a triangle-wave displacement
// of half-period `period`; per-clip start position and phase are seeded.
inline SynthDataset color_action_dataset(
    int n_per_class, const std::vector<ActionClassSpec>& classes,
    uint64_t seed, int width = 64, int height = 64, int frames = 40,
    double noise_std = 0.02, double blob_sigma = 3.0,
    Rgb bg = {0.2, 0.2, 0.2}) {
  if (classes.size() < 2)
    throw std::invalid_argument("color_action_dataset: need >= 2 classes");

  SynthDataset ds;
  for (size_t ci = 0; ci < classes.size(); ++ci) {
    const ActionClassSpec& cs = classes[ci];
    const double ext_x = std::fabs(cs.vx) * cs.period / 2.0;
    const double ext_y = std::fabs(cs.vy) * cs.period / 2.0;
    const double margin = 4.0 * blob_sigma;
    const double lo_x = margin + ext_x, hi_x = width - 1 - margin - ext_x;
    const double lo_y = margin + ext_y, hi_y = height - 1 - margin - ext_y;
    if (lo_x >= hi_x || lo_y >= hi_y)
      throw std::invalid_argument("color_action_dataset: motion span exceeds frame");

    for (int i = 0; i < n_per_class; ++i) {
      const std::string id = cs.label + "_" + std::to_string(i);
      SplitMix64 rng(fnv1a64(id, seed));
      const double sx = rng.uniform(lo_x, hi_x);
      const double sy = rng.uniform(lo_y, hi_y);
      const int phase = int(rng.bounded(uint64_t(2 * cs.period)));
      const uint64_t noise_seed = rng.next();

      SynthSpec s;
      s.width = width;
      s.height = height;
      s.frames = frames;
      s.bg = bg;
      s.fg = cs.fg;
      s.blob_sigma = blob_sigma;
      Clip clip = detail::solid_clip(id, s);
      for (int f = 0; f < frames; ++f) {
        const int ph = (f + phase) % (2 * cs.period);
        const double d = (ph < cs.period ? ph : 2 * cs.period - ph) -
                         cs.period / 2.0;
        const double cx = sx + cs.vx * d;
        const double cy = sy + cs.vy * d;
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) {
            const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const double w = std::exp(-r2 / (2.0 * blob_sigma * blob_sigma));
            clip.r.at(x, y, f) += (cs.fg[0] - bg[0]) * w;
            clip.g.at(x, y, f) += (cs.fg[1] - bg[1]) * w;
            clip.b.at(x, y, f) += (cs.fg[2] - bg[2]) * w;
          }
      }
      detail::add_gray_noise(clip, noise_std, noise_seed);
      clip.label = cs.label;

      LabeledClip lc;
      lc.clip = std::move(clip);
      lc.label = cs.label;
      lc.train = i < n_per_class / 2;
      ds.clips.push_back(std::move(lc));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// On-disk form: one PPM directory per clip plus manifest.tsv.

inline void write_clip_ppm(const Clip& clip, const fs::path& dir) {
  fs::create_directories(dir);
  const int w = clip.width(), h = clip.height();
  std::vector<uint8_t> rgb(size_t(w) * h * 3);
  for (int t = 0; t < clip.frames(); ++t) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t o = (size_t(y) * w + x) * 3;
        auto q = [](double v) {
          return uint8_t(std::clamp(std::lround(v * 255.0), 0l, 255l));
        };
        rgb[o] = q(clip.r.at(x, y, t));
        rgb[o + 1] = q(clip.g.at(x, y, t));
        rgb[o + 2] = q(clip.b.at(x, y, t));
      }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.ppm", t);
    write_ppm(dir / name, w, h, rgb);
  }
}

inline void write_dataset(const SynthDataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const auto& lc : ds.clips) {
    write_clip_ppm(lc.clip, dir / lc.clip.id);
    ManifestEntry e;
    e.clip_path = lc.clip.id;
    e.label = lc.label;
    e.train = lc.train;
    e.resolved = dir / lc.clip.id;
    entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.tsv", entries);
}

}  // namespace stv
