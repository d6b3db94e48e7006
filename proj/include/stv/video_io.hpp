#pragma once

// Clip decoding and the on-disk dataset layout.
//
// Two clip sources are supported:
//   - image-sequence directories: lexicographically ordered binary netpbm
//     frames (P6 color / P5 gray, 8-bit), all with identical dimensions;
//   - uncompressed Y4M (YUV4MPEG2), colorspaces C420* and C444, 8-bit,
//     converted to RGB with BT.601 limited-range coefficients and
//     nearest-neighbor chroma upsampling.
//
// Channels are normalized to [0,1] doubles on load. A dataset is a
// manifest.tsv with lines: clip-path TAB label TAB split{train|test};
// clip paths are resolved relative to the manifest's directory.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stv/util.hpp"
#include "stv/volume.hpp"

namespace stv {

namespace fs = std::filesystem;

// RGB volume triple; planes always dimension-equal.
struct Clip {
  std::string id;
  std::optional<std::string> label;
  ScalarVolume r, g, b;

  int width() const { return r.width(); }
  int height() const { return r.height(); }
  int frames() const { return r.frames(); }
};

enum class ClipFormat { y4m, image_sequence };

struct RgbPlanes {
  ScalarVolume r, g, b;
};

// ---------------------------------------------------------------------------
// netpbm (P5/P6, 8-bit) frames

namespace detail {

inline void skip_pnm_space(ByteReader& rd) {
  while (rd.pos < rd.buf.size()) {
    char c = rd.buf[rd.pos];
    if (c == '#') {
      while (rd.pos < rd.buf.size() && rd.buf[rd.pos] != '\n') ++rd.pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++rd.pos;
    } else {
      break;
    }
  }
}

inline int pnm_int(ByteReader& rd) {
  skip_pnm_space(rd);
  int v = 0;
  bool any = false;
  while (rd.pos < rd.buf.size() && rd.buf[rd.pos] >= '0' &&
         rd.buf[rd.pos] <= '9') {
    v = v * 10 + (rd.buf[rd.pos] - '0');
    any = true;
    ++rd.pos;
  }
  if (!any) throw std::runtime_error("bad netpbm header in " + rd.ctx);
  return v;
}

}  // namespace detail

struct Frame {
  int width = 0, height = 0;
  int maxval = 255;
  bool color = false;
  std::vector<uint8_t> pixels;  // RGB interleaved (color) or gray
};

inline Frame read_pnm_frame(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  ByteReader rd(bytes, path.string());
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw std::runtime_error("unsupported image format (want binary P5/P6): " +
                             path.string());
  Frame f;
  f.color = bytes[1] == '6';
  rd.pos = 2;
  f.width = detail::pnm_int(rd);
  f.height = detail::pnm_int(rd);
  f.maxval = detail::pnm_int(rd);
  if (f.maxval <= 0 || f.maxval > 255)
    throw std::runtime_error("unsupported pixel depth (maxval " +
                             std::to_string(f.maxval) + ") in " +
                             path.string());
  ++rd.pos;  // single whitespace after maxval
  const size_t n = size_t(f.width) * f.height * (f.color ? 3 : 1);
  rd.need(n);
  f.pixels.assign(bytes.begin() + rd.pos, bytes.begin() + rd.pos + n);
  return f;
}

inline void write_ppm(const fs::path& path, int w, int h,
                      const std::vector<uint8_t>& rgb) {
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------

inline Clip load_image_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  if (frames.empty())
    throw std::runtime_error("no .ppm/.pgm frames in " + dir.string());

  Clip clip;
  clip.id = dir.filename().string();
  int w = 0, h = 0;
  for (size_t i = 0; i < frames.size(); ++i) {
    Frame f;
    try {
      f = read_pnm_frame(frames[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("frame " + std::to_string(i + 1) + ": " +
                               e.what());
    }
    if (i == 0) {
      w = f.width;
      h = f.height;
      clip.r = ScalarVolume(w, h, int(frames.size()));
      clip.g = ScalarVolume(w, h, int(frames.size()));
      clip.b = ScalarVolume(w, h, int(frames.size()));
    } else if (f.width != w || f.height != h) {
      throw std::runtime_error(
          "frame " + std::to_string(i + 1) + " dimension mismatch: got " +
          std::to_string(f.width) + "x" + std::to_string(f.height) +
          ", expected " + std::to_string(w) + "x" + std::to_string(h) + " (" +
          frames[i].string() + ")");
    }
    const int t = int(i);
    const double scale = double(f.maxval);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (f.color) {
          const size_t o = (size_t(y) * w + x) * 3;
          clip.r.at(x, y, t) = f.pixels[o] / scale;
          clip.g.at(x, y, t) = f.pixels[o + 1] / scale;
          clip.b.at(x, y, t) = f.pixels[o + 2] / scale;
        } else {
          const double v = f.pixels[size_t(y) * w + x] / scale;
          clip.r.at(x, y, t) = v;
          clip.g.at(x, y, t) = v;
          clip.b.at(x, y, t) = v;
        }
      }
  }
  return clip;
}

// ---------------------------------------------------------------------------
// Y4M

namespace detail {

inline void ycbcr_to_rgb(double y8, double cb8, double cr8, double& r,
                         double& g, double& b) {
  // BT.601 limited range
  const double yy = (y8 - 16.0) / 219.0;
  const double pb = (cb8 - 128.0) / 224.0;
  const double pr = (cr8 - 128.0) / 224.0;
  r = std::clamp(yy + 1.402 * pr, 0.0, 1.0);
  g = std::clamp(yy - 0.344136 * pb - 0.714136 * pr, 0.0, 1.0);
  b = std::clamp(yy + 1.772 * pb, 0.0, 1.0);
}

}  // namespace detail

inline Clip load_y4m(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  size_t pos = bytes.find('\n');
  if (pos == std::string::npos || bytes.rfind("YUV4MPEG2", 0) != 0)
    throw std::runtime_error("not a YUV4MPEG2 stream: " + path.string());

  int w = 0, h = 0;
  std::string colorspace = "C420jpeg";
  {
    std::istringstream hdr(bytes.substr(0, pos));
    std::string tok;
    hdr >> tok;  // YUV4MPEG2
    while (hdr >> tok) {
      if (tok[0] == 'W') w = std::stoi(tok.substr(1));
      else if (tok[0] == 'H') h = std::stoi(tok.substr(1));
      else if (tok[0] == 'C') colorspace = tok;
    }
  }
  if (w <= 0 || h <= 0)
    throw std::runtime_error("missing W/H in Y4M header: " + path.string());

  bool subsampled;
  if (colorspace.rfind("C420", 0) == 0) {
    subsampled = true;
    if (w % 2 || h % 2)
      throw std::runtime_error("odd dimensions with 4:2:0 chroma: " +
                               path.string());
  } else if (colorspace == "C444") {
    subsampled = false;
  } else {
    throw std::runtime_error("unsupported Y4M colorspace " + colorspace +
                             " (8-bit C420*/C444 only): " + path.string());
  }

  const size_t ysize = size_t(w) * h;
  const size_t csize = subsampled ? size_t(w / 2) * (h / 2) : ysize;

  struct Raw {
    std::vector<uint8_t> y, cb, cr;
  };
  std::vector<Raw> raw;
  pos += 1;
  while (pos < bytes.size()) {
    size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos || bytes.compare(pos, 5, "FRAME") != 0)
      throw std::runtime_error("bad FRAME header at frame " +
                               std::to_string(raw.size() + 1) + " in " +
                               path.string());
    pos = eol + 1;
    if (pos + ysize + 2 * csize > bytes.size())
      throw std::runtime_error("truncated frame " +
                               std::to_string(raw.size() + 1) + " in " +
                               path.string());
    Raw f;
    auto take = [&](size_t n) {
      std::vector<uint8_t> v(bytes.begin() + pos, bytes.begin() + pos + n);
      pos += n;
      return v;
    };
    f.y = take(ysize);
    f.cb = take(csize);
    f.cr = take(csize);
    raw.push_back(std::move(f));
  }
  if (raw.empty())
    throw std::runtime_error("Y4M stream has no frames: " + path.string());

  Clip clip;
  clip.id = path.stem().string();
  clip.r = ScalarVolume(w, h, int(raw.size()));
  clip.g = ScalarVolume(w, h, int(raw.size()));
  clip.b = ScalarVolume(w, h, int(raw.size()));
  for (size_t t = 0; t < raw.size(); ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t ci = subsampled ? size_t(y / 2) * (w / 2) + (x / 2)
                                     : size_t(y) * w + x;
        double rr, gg, bb;
        detail::ycbcr_to_rgb(raw[t].y[size_t(y) * w + x], raw[t].cb[ci],
                             raw[t].cr[ci], rr, gg, bb);
        clip.r.at(x, y, int(t)) = rr;
        clip.g.at(x, y, int(t)) = gg;
        clip.b.at(x, y, int(t)) = bb;
      }
  return clip;
}

inline Clip load_clip(const fs::path& path, ClipFormat format) {
  if (!fs::exists(path))
    throw std::runtime_error("no such path: " + path.string());
  return format == ClipFormat::y4m ? load_y4m(path)
                                   : load_image_sequence(path);
}

// y4m if the path is a .y4m file, image sequence if a directory
inline Clip load_clip_auto(const fs::path& path) {
  if (fs::is_directory(path)) return load_image_sequence(path);
  return load_y4m(path);
}

// ---------------------------------------------------------------------------

// ITU-R BT.601 luminance; recorded convention for all intensity processing.
inline constexpr double kLumR = 0.299, kLumG = 0.587, kLumB = 0.114;

inline ScalarVolume to_grayscale(const Clip& clip) {
  ScalarVolume out(clip.width(), clip.height(), clip.frames());
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i)
    out.data()[i] = kLumR * clip.r.data()[i] + kLumG * clip.g.data()[i] +
                    kLumB * clip.b.data()[i];
  return out;
}

inline RgbPlanes rgb_planes(const Clip& clip) {
  return RgbPlanes{clip.r, clip.g, clip.b};
}

// ---------------------------------------------------------------------------
// manifest.tsv

struct ManifestEntry {
  std::string clip_path;  // as written in the file
  std::string label;
  bool train = true;

  fs::path resolved;  // clip_path resolved against the manifest directory
};

inline std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3)
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": want 3 tab-separated columns");
    if (cols[2] != "train" && cols[2] != "test")
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": split must be train|test");
    ManifestEntry e;
    e.clip_path = cols[0];
    e.label = cols[1];
    e.train = cols[2] == "train";
    e.resolved = path.parent_path() / e.clip_path;
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_manifest(const fs::path& path,
                           const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.clip_path;
    out += '\t';
    out += e.label;
    out += '\t';
    out += e.train ? "train" : "test";
    out += '\n';
  }
  atomic_write_file(path, out);
}

}  // namespace stv
