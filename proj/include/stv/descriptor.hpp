#pragma once

// Patch descriptors around interest points.
//
// A patch spans roughly 9*sigma x 9*sigma x 9*tau around the point and is
// sliced into a 3x3x2 cell grid. Per cell: a 4-bin histogram of spatial
// gradient orientations weighted by gradient magnitude (HoG) and a 5-bin
// histogram of optical-flow directions (4 directions + a no-motion bin)
// weighted by flow magnitude (HoF). A single 36-bin hue histogram over the
// whole patch accumulates saturation weighted by a separable Gaussian mask.
// Concatenations: HoGHoF = HoG|HoF (162), HueSTIP = HoG|HoF|Hue (198).

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stv/detector.hpp"
#include "stv/scalespace.hpp"
#include "stv/util.hpp"
#include "stv/video_io.hpp"
#include "stv/volume.hpp"

namespace stv {

enum class Kind { HoG, HoF, Hue, HoGHoF, HueSTIP };

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::HoG: return "hog";
    case Kind::HoF: return "hof";
    case Kind::Hue: return "hue";
    case Kind::HoGHoF: return "hoghof";
    default: return "huestip";
  }
}

inline Kind kind_from_name(const std::string& s) {
  if (s == "hog") return Kind::HoG;
  if (s == "hof") return Kind::HoF;
  if (s == "hue") return Kind::Hue;
  if (s == "hoghof" || s == "stip") return Kind::HoGHoF;
  if (s == "huestip") return Kind::HueSTIP;
  throw std::runtime_error("unknown descriptor kind '" + s + "'");
}

enum class Norm { l1, l2 };

struct DescriptorParams {
  double extent_factor = 4.5;   // half extent = ceil(factor * sigma)
  int flow_window = 5;          // spatial window of the local LS flow solve
  double no_motion_thresh = 0.25;  // px/frame; below this mass goes to bin 5
  int hue_bins = 36;
  bool hue_per_cell = false;    // one histogram per cell instead of one global
  double hue_mask_scale = 1.0;  // multiplies the Gaussian mask stddevs
  Norm norm = Norm::l1;
};

inline constexpr int kCellsX = 3, kCellsY = 3, kCellsT = 2;
inline constexpr int kCells = kCellsX * kCellsY * kCellsT;
inline constexpr int kHogBins = 4, kHofBins = 5;

inline int descriptor_length(Kind k, const DescriptorParams& dp) {
  const int hue = dp.hue_bins * (dp.hue_per_cell ? kCells : 1);
  switch (k) {
    case Kind::HoG: return kCells * kHogBins;
    case Kind::HoF: return kCells * kHofBins;
    case Kind::Hue: return hue;
    case Kind::HoGHoF: return kCells * (kHogBins + kHofBins);
    default: return kCells * (kHogBins + kHofBins) + hue;
  }
}

struct FeatureVector {
  Kind kind = Kind::HoGHoF;
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// Patch geometry

struct PatchGeometry {
  int cx = 0, cy = 0, ct = 0;              // interest-point location
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0, t0 = 0, t1 = 0;  // inclusive, clipped
  double hx = 0, hy = 0, ht = 0;           // nominal half extents
  std::array<int, kCellsX + 1> xe{};       // cell edges, half-open spans
  std::array<int, kCellsY + 1> ye{};
  std::array<int, kCellsT + 1> te{};

  int cell_of(int x, int y, int t) const {
    auto find = [](const int* e, int n, int v) {
      for (int i = 0; i < n; ++i)
        if (v >= e[i] && v < e[i + 1]) return i;
      return -1;
    };
    const int ix = find(xe.data(), kCellsX, x);
    const int iy = find(ye.data(), kCellsY, y);
    const int it = find(te.data(), kCellsT, t);
    if (ix < 0 || iy < 0 || it < 0) return -1;
    return (it * kCellsY + iy) * kCellsX + ix;
  }
};

namespace detail {

template <int N, size_t M>
inline void split_near_equal(int lo, int len, std::array<int, M>& edges) {
  static_assert(M == N + 1);
  for (int i = 0; i <= N; ++i) edges[i] = lo + (len * i) / N;
}

}  // namespace detail

struct ClipDims {
  int width = 0, height = 0, frames = 0;
};

inline PatchGeometry patch_bounds(const InterestPoint& p, ClipDims dims,
                                  const DescriptorParams& dp = {}) {
  if (p.x < 0 || p.x >= dims.width || p.y < 0 || p.y >= dims.height ||
      p.t < 0 || p.t >= dims.frames)
    throw std::invalid_argument("patch_bounds: point outside clip");

  PatchGeometry g;
  g.cx = p.x;
  g.cy = p.y;
  g.ct = p.t;
  g.hx = g.hy = std::ceil(dp.extent_factor * std::sqrt(p.sigma2));
  g.ht = std::ceil(dp.extent_factor * std::sqrt(p.tau2));
  g.x0 = std::max(0, p.x - int(g.hx));
  g.x1 = std::min(dims.width - 1, p.x + int(g.hx));
  g.y0 = std::max(0, p.y - int(g.hy));
  g.y1 = std::min(dims.height - 1, p.y + int(g.hy));
  g.t0 = std::max(0, p.t - int(g.ht));
  g.t1 = std::min(dims.frames - 1, p.t + int(g.ht));

  if (g.x1 - g.x0 + 1 < kCellsX || g.y1 - g.y0 + 1 < kCellsY ||
      g.t1 - g.t0 + 1 < kCellsT)
    throw std::invalid_argument(
        "patch_bounds: clipped patch too small for the 3x3x2 cell grid");

  detail::split_near_equal<kCellsX>(g.x0, g.x1 - g.x0 + 1, g.xe);
  detail::split_near_equal<kCellsY>(g.y0, g.y1 - g.y0 + 1, g.ye);
  detail::split_near_equal<kCellsT>(g.t0, g.t1 - g.t0 + 1, g.te);
  return g;
}

// ---------------------------------------------------------------------------
// Histogram plumbing

namespace detail {

// direction bins with centers at 0, pi/2, pi, 3pi/2; nearest center wins,
// exact ties go to the lower bin index
inline int direction_bin(double angle) {
  if (angle < 0) angle += kTwoPi;
  int best = 0;
  double best_d = kTwoPi;
  for (int b = 0; b < 4; ++b) {
    double d = std::fabs(angle - b * (kPi / 2.0));
    d = std::min(d, kTwoPi - d);
    if (d < best_d) {
      best_d = d;
      best = b;
    }
  }
  return best;
}

inline void normalize_block(double* v, int n, Norm norm) {
  double mass = 0.0;
  for (int i = 0; i < n; ++i)
    mass += norm == Norm::l1 ? v[i] : v[i] * v[i];
  if (mass <= 0.0) return;  // zero-mass blocks stay zero
  const double scale = norm == Norm::l1 ? mass : std::sqrt(mass);
  for (int i = 0; i < n; ++i) v[i] /= scale;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// HoG

// `grad` is the gradient field restricted to (or covering) the patch;
// volumes are addressed in absolute clip coordinates via their origin.
inline FeatureVector hog(const GradientField& grad, const PatchGeometry& g,
                         const DescriptorParams& dp = {}) {
  FeatureVector fv{Kind::HoG, std::vector<double>(kCells * kHogBins, 0.0)};
  for (int t = g.t0; t <= g.t1; ++t)
    for (int y = g.y0; y <= g.y1; ++y)
      for (int x = g.x0; x <= g.x1; ++x) {
        const double gx = grad.lx.at_abs(x, y, t);
        const double gy = grad.ly.at_abs(x, y, t);
        const double mag = std::sqrt(gx * gx + gy * gy);
        if (mag == 0.0) continue;
        const int cell = g.cell_of(x, y, t);
        const int bin = detail::direction_bin(std::atan2(gy, gx));
        fv.values[cell * kHogBins + bin] += mag;
      }
  for (int c = 0; c < kCells; ++c)
    detail::normalize_block(&fv.values[c * kHogBins], kHogBins, dp.norm);
  return fv;
}

// ---------------------------------------------------------------------------
// Optical flow: local least squares over a 5x5 spatial window between
// consecutive frames. Flow is defined on the patch interior only, so the
// fields are (W-4)x(H-4)x(T-2) with origin offset (2,2,1).

struct FlowField {
  ScalarVolume u, v;
};

inline FlowField optical_flow(const ScalarVolume& patch,
                              const DescriptorParams& dp = {}) {
  const int rw = dp.flow_window / 2;
  const int w = patch.width(), h = patch.height(), tn = patch.frames();
  if (w < dp.flow_window || h < dp.flow_window || tn < 3)
    throw std::invalid_argument("optical_flow: patch too small");

  const GradientField g = gradient(patch);

  FlowField f{ScalarVolume(w - 2 * rw, h - 2 * rw, tn - 2),
              ScalarVolume(w - 2 * rw, h - 2 * rw, tn - 2)};
  for (ScalarVolume* v : {&f.u, &f.v}) {
    v->origin_x = patch.origin_x + rw;
    v->origin_y = patch.origin_y + rw;
    v->origin_t = patch.origin_t + 1;
  }

  for (int t = 1; t < tn - 1; ++t)
    for (int y = rw; y < h - rw; ++y)
      for (int x = rw; x < w - rw; ++x) {
        double axx = 0, axy = 0, ayy = 0, bx = 0, by = 0;
        for (int dy = -rw; dy <= rw; ++dy)
          for (int dx = -rw; dx <= rw; ++dx) {
            const double gx = g.lx.at(x + dx, y + dy, t);
            const double gy = g.ly.at(x + dx, y + dy, t);
            const double gt = g.lt.at(x + dx, y + dy, t);
            axx += gx * gx;
            axy += gx * gy;
            ayy += gy * gy;
            bx -= gx * gt;
            by -= gy * gt;
          }
        // eigenvalues of the symmetric 2x2 normal matrix
        const double tr = axx + ayy;
        const double disc =
            std::sqrt((axx - ayy) * (axx - ayy) + 4.0 * axy * axy);
        const double lmin = 0.5 * (tr - disc);
        const double lmax = 0.5 * (tr + disc);
        double uu = 0.0, vv = 0.0;
        if (lmin >= 1e-9 && lmax <= 1e6 * lmin) {
          const double det = axx * ayy - axy * axy;
          uu = (ayy * bx - axy * by) / det;
          vv = (axx * by - axy * bx) / det;
        }
        f.u.at(x - rw, y - rw, t - 1) = uu;
        f.v.at(x - rw, y - rw, t - 1) = vv;
      }
  return f;
}

// ---------------------------------------------------------------------------
// HoF

inline FeatureVector hof(const FlowField& flow, const PatchGeometry& g,
                         const DescriptorParams& dp = {}) {
  FeatureVector fv{Kind::HoF, std::vector<double>(kCells * kHofBins, 0.0)};
  const ScalarVolume& u = flow.u;
  for (int t = 0; t < u.frames(); ++t)
    for (int y = 0; y < u.height(); ++y)
      for (int x = 0; x < u.width(); ++x) {
        const int cell = g.cell_of(x + u.origin_x, y + u.origin_y,
                                   t + u.origin_t);
        if (cell < 0) continue;
        const double uu = u.at(x, y, t), vv = flow.v.at(x, y, t);
        const double mag = std::sqrt(uu * uu + vv * vv);
        if (mag < dp.no_motion_thresh) {
          fv.values[cell * kHofBins + 4] += 1.0;  // no-motion bin counts pixels
        } else {
          const int bin = detail::direction_bin(std::atan2(vv, uu));
          fv.values[cell * kHofBins + bin] += mag;
        }
      }
  for (int c = 0; c < kCells; ++c)
    detail::normalize_block(&fv.values[c * kHofBins], kHofBins, dp.norm);
  return fv;
}

// ---------------------------------------------------------------------------
// Hue / saturation (opponent-color form)

struct HueSat {
  double hue = 0.0;  // radians in [0, 2pi)
  double sat = 0.0;
};

inline HueSat hue_sat(double r, double g, double b) {
  const double num = std::sqrt(3.0) * (r - g);
  const double den = r + g - 2.0 * b;
  HueSat hs;
  if (num == 0.0 && den == 0.0) return hs;  // grey axis: hue 0, sat 0
  hs.hue = std::atan2(num, den);
  if (hs.hue < 0.0) hs.hue += kTwoPi;
  if (hs.hue >= kTwoPi) hs.hue = 0.0;
  // the radicand is nonnegative analytically; rounding can graze below zero
  const double radicand =
      2.0 * (r * r + g * g + b * b - r * g - r * b - g * b) / 3.0;
  hs.sat = std::sqrt(std::max(0.0, radicand));
  return hs;
}

// Saturation-weighted hue histogram over the patch. Each voxel contributes
// sat * G(x,y,t) to bin floor(hue * bins / 2pi), where G is a separable
// Gaussian mask centred on the patch with stddevs (hx/2, hy/2, ht/2).
inline FeatureVector hue_histogram(const ScalarVolume& r,
                                   const ScalarVolume& g,
                                   const ScalarVolume& b,
                                   const PatchGeometry& geom,
                                   const DescriptorParams& dp = {}) {
  const int blocks = dp.hue_per_cell ? kCells : 1;
  FeatureVector fv{Kind::Hue, std::vector<double>(blocks * dp.hue_bins, 0.0)};

  const double cx = 0.5 * (geom.x0 + geom.x1);
  const double cy = 0.5 * (geom.y0 + geom.y1);
  const double ct = 0.5 * (geom.t0 + geom.t1);
  const double sx = 0.5 * geom.hx * dp.hue_mask_scale;
  const double sy = 0.5 * geom.hy * dp.hue_mask_scale;
  const double st = 0.5 * geom.ht * dp.hue_mask_scale;

  for (int t = geom.t0; t <= geom.t1; ++t)
    for (int y = geom.y0; y <= geom.y1; ++y)
      for (int x = geom.x0; x <= geom.x1; ++x) {
        const HueSat hs = hue_sat(r.at_abs(x, y, t), g.at_abs(x, y, t),
                                  b.at_abs(x, y, t));
        if (hs.sat == 0.0) continue;
        int bin = static_cast<int>(std::floor(hs.hue * dp.hue_bins / kTwoPi));
        if (bin >= dp.hue_bins) bin = dp.hue_bins - 1;
        const double mask =
            std::exp(-0.5 * ((x - cx) * (x - cx) / (sx * sx) +
                             (y - cy) * (y - cy) / (sy * sy) +
                             (t - ct) * (t - ct) / (st * st)));
        const int block = dp.hue_per_cell ? geom.cell_of(x, y, t) : 0;
        fv.values[block * dp.hue_bins + bin] += hs.sat * mask;
      }
  for (int c = 0; c < blocks; ++c)
    detail::normalize_block(&fv.values[c * dp.hue_bins], dp.hue_bins, dp.norm);
  return fv;
}

// ---------------------------------------------------------------------------
// Full descriptors

namespace detail {

// shared scaffolding so every caller computes sub-blocks identically
struct PatchContext {
  PatchGeometry geom;
  GradientField grad_patch;  // of the smoothed volume, cropped to the patch
  ScalarVolume smoothed_patch;
};

inline PatchContext make_patch_context(const ScalarVolume& smoothed,
                                       const InterestPoint& p,
                                       const DescriptorParams& dp) {
  PatchContext ctx;
  ctx.geom = patch_bounds(
      p, ClipDims{smoothed.width(), smoothed.height(), smoothed.frames()}, dp);
  const GradientField g = gradient(smoothed);
  const auto& gm = ctx.geom;
  ctx.grad_patch =
      GradientField{g.lx.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1),
                    g.ly.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1),
                    g.lt.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1)};
  ctx.smoothed_patch = smoothed.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1);
  return ctx;
}

inline FeatureVector assemble(const Clip& clip, const PatchContext& ctx,
                              Kind kind, const DescriptorParams& dp) {
  const FeatureVector fhog = hog(ctx.grad_patch, ctx.geom, dp);
  const FeatureVector fhof =
      hof(optical_flow(ctx.smoothed_patch, dp), ctx.geom, dp);
  FeatureVector out{kind, {}};
  out.values = fhog.values;
  out.values.insert(out.values.end(), fhof.values.begin(), fhof.values.end());
  if (kind == Kind::HueSTIP) {
    const FeatureVector fhue =
        hue_histogram(clip.r, clip.g, clip.b, ctx.geom, dp);
    out.values.insert(out.values.end(), fhue.values.begin(),
                      fhue.values.end());
  }
  return out;
}

}  // namespace detail

// Descriptor of a single point. Gradients and flow are taken from the clip's
// grayscale volume smoothed at the point's own detection scale; hue comes
// from the raw RGB planes.
inline FeatureVector describe(const Clip& clip, const InterestPoint& p,
                              Kind kind, const DescriptorParams& dp = {}) {
  if (kind != Kind::HoGHoF && kind != Kind::HueSTIP)
    throw std::invalid_argument("describe: kind must be hoghof or huestip");
  const ScalarVolume gray = to_grayscale(clip);
  const ScalarVolume smoothed = smooth(gray, ScalePair{p.sigma2, p.tau2});
  return detail::assemble(clip, detail::make_patch_context(smoothed, p, dp),
                          kind, dp);
}

struct DescriptorRecord {
  InterestPoint point;
  FeatureVector fv;
};

// Batch extraction; points sharing a scale share one smoothing pass.
// Output order matches input order.
inline std::vector<DescriptorRecord> extract_descriptors(
    const Clip& clip, const std::vector<InterestPoint>& pts, Kind kind,
    const DescriptorParams& dp = {}) {
  std::vector<DescriptorRecord> out(pts.size());
  const ScalarVolume gray = to_grayscale(clip);

  std::vector<bool> done(pts.size(), false);
  for (size_t i = 0; i < pts.size(); ++i) {
    if (done[i]) continue;
    const ScalePair sc{pts[i].sigma2, pts[i].tau2};
    const ScalarVolume smoothed = smooth(gray, sc);
    const GradientField g = gradient(smoothed);
    for (size_t j = i; j < pts.size(); ++j) {
      if (done[j] || ScalePair{pts[j].sigma2, pts[j].tau2} != sc) continue;
      detail::PatchContext ctx;
      ctx.geom = patch_bounds(
          pts[j], ClipDims{gray.width(), gray.height(), gray.frames()}, dp);
      const auto& gm = ctx.geom;
      ctx.grad_patch =
          GradientField{g.lx.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1),
                        g.ly.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1),
                        g.lt.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1)};
      ctx.smoothed_patch =
          smoothed.crop(gm.x0, gm.x1, gm.y0, gm.y1, gm.t0, gm.t1);
      out[j] = DescriptorRecord{pts[j], detail::assemble(clip, ctx, kind, dp)};
      done[j] = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Descriptor files.
//
// TSV, one record per line:
//   clip-id  x  y  t  sigma2  tau2  kind  v0 ... v{n-1}
//
// Binary (all little-endian):
//   magic "STVD", u32 version=1, u8 kind, u32 dim, u64 count, then per
//   record: u16 id-length, id bytes, i32 x, i32 y, i32 t, f64 sigma2,
//   f64 tau2, f64*dim values.

inline std::string descriptors_to_tsv(const std::string& clip_id,
                                      const std::vector<DescriptorRecord>& rs) {
  std::string out;
  for (const auto& r : rs) {
    out += clip_id;
    out += '\t' + std::to_string(r.point.x) + '\t' + std::to_string(r.point.y) +
           '\t' + std::to_string(r.point.t) + '\t' + fmt_g17(r.point.sigma2) +
           '\t' + fmt_g17(r.point.tau2) + '\t' + kind_name(r.fv.kind);
    for (double v : r.fv.values) out += '\t' + fmt_g17(v);
    out += '\n';
  }
  return out;
}

inline std::string descriptors_to_binary(const std::string& clip_id,
                                         Kind kind,
                                         const std::vector<DescriptorRecord>& rs) {
  std::string out = "STVD";
  put_u32(out, 1);
  out.push_back(char(static_cast<uint8_t>(kind)));
  const uint32_t dim = rs.empty() ? 0 : uint32_t(rs.front().fv.values.size());
  put_u32(out, dim);
  put_u64(out, rs.size());
  for (const auto& r : rs) {
    if (r.fv.values.size() != dim)
      throw std::runtime_error("descriptors_to_binary: ragged dimensions");
    put_u16(out, uint16_t(clip_id.size()));
    out += clip_id;
    put_i32(out, r.point.x);
    put_i32(out, r.point.y);
    put_i32(out, r.point.t);
    put_f64(out, r.point.sigma2);
    put_f64(out, r.point.tau2);
    for (double v : r.fv.values) put_f64(out, v);
  }
  return out;
}

struct DescriptorFile {
  Kind kind;
  uint32_t dim;
  std::vector<std::string> clip_ids;
  std::vector<DescriptorRecord> records;
};

inline DescriptorFile descriptors_from_binary(std::string_view bytes,
                                              const std::string& ctx) {
  ByteReader rd(bytes, ctx);
  if (rd.bytes(4) != "STVD")
    throw std::runtime_error("bad descriptor file magic: " + ctx);
  if (rd.u32() != 1)
    throw std::runtime_error("unsupported descriptor file version: " + ctx);
  DescriptorFile f;
  f.kind = static_cast<Kind>(uint8_t(rd.bytes(1)[0]));
  f.dim = rd.u32();
  const uint64_t count = rd.u64();
  f.records.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const uint16_t idlen = rd.u16();
    f.clip_ids.push_back(rd.bytes(idlen));
    DescriptorRecord r;
    r.point.x = rd.i32();
    r.point.y = rd.i32();
    r.point.t = rd.i32();
    r.point.sigma2 = rd.f64();
    r.point.tau2 = rd.f64();
    r.fv.kind = f.kind;
    r.fv.values.resize(f.dim);
    for (uint32_t d = 0; d < f.dim; ++d) r.fv.values[d] = rd.f64();
    r.point.response = 0.0;
    f.records.push_back(std::move(r));
  }
  return f;
}

}  // namespace stv
