#pragma once

// Anisotropic spatiotemporal Gaussian smoothing and gradients.
//
// The 3D kernel factors into per-axis 1D Gaussians, so smoothing runs as
// three separable passes (O(3r) per voxel instead of O(r^3)). Borders use
// symmetric reflection: index -1 maps to 0, -2 to 1, n to n-1, and so on,
// which keeps the DC gain at exactly 1 and avoids dark-frame bias at the
// ends of a clip.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stv/volume.hpp"

namespace stv {

struct ScalePair {
  double sigma2 = 1.0;  // spatial variance, px^2
  double tau2 = 1.0;    // temporal variance, frame^2

  bool operator==(const ScalePair&) const = default;
};

// Samples of exp(-u^2 / 2*variance) at integer u in [-r, r] with
// r = ceil(truncation * sigma), renormalized to sum to 1.
inline std::vector<double> gauss_kernel_1d(double variance,
                                           double truncation = 4.0) {
  if (!(variance > 0.0))
    throw std::invalid_argument("gauss_kernel_1d: variance must be positive");
  if (!(truncation > 0.0))
    throw std::invalid_argument("gauss_kernel_1d: truncation must be positive");
  const double sigma = std::sqrt(variance);
  const int r = static_cast<int>(std::ceil(truncation * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int u = -r; u <= r; ++u) {
    double w = std::exp(-double(u) * u / (2.0 * variance));
    k[u + r] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

// symmetric (edge-repeating) reflection into [0, n)
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

enum class Axis { x = 0, y = 1, t = 2 };

// 1D convolution along one axis, odd symmetric kernel, reflected borders.
// The x pass slides along contiguous rows; the y and t passes accumulate
// whole rows per tap so reads and writes stay sequential in memory. Every
// output element sums its taps in ascending-offset order on all paths.
inline ScalarVolume convolve_axis(const ScalarVolume& vol, Axis axis,
                                  const std::vector<double>& kernel) {
  if (kernel.empty() || kernel.size() % 2 == 0)
    throw std::invalid_argument("convolve_axis: kernel length must be odd");
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = vol.width(), h = vol.height(), tn = vol.frames();

  ScalarVolume out(w, h, tn);
  out.origin_x = vol.origin_x;
  out.origin_y = vol.origin_y;
  out.origin_t = vol.origin_t;

  const double* src = vol.data().data();
  double* dst = out.data().data();

  if (axis == Axis::x) {
    for (int t = 0; t < tn; ++t)
      for (int y = 0; y < h; ++y) {
        const double* row = src + (size_t(t) * h + y) * w;
        double* orow = dst + (size_t(t) * h + y) * w;
        int x = 0;
        for (; x < std::min(r, w); ++x) {
          double acc = 0.0;
          for (int u = -r; u <= r; ++u)
            acc += kernel[u + r] * row[reflect_index(x + u, w)];
          orow[x] = acc;
        }
        for (; x + r < w; ++x) {
          double acc = 0.0;
          for (int u = -r; u <= r; ++u) acc += kernel[u + r] * row[x + u];
          orow[x] = acc;
        }
        for (; x < w; ++x) {
          double acc = 0.0;
          for (int u = -r; u <= r; ++u)
            acc += kernel[u + r] * row[reflect_index(x + u, w)];
          orow[x] = acc;
        }
      }
    return out;
  }

  // y and t passes: for each output line, add k[u] * source-line(c+u)
  const bool along_y = axis == Axis::y;
  const int n = along_y ? h : tn;
  const size_t planes = along_y ? size_t(tn) : 1;
  const size_t lines = along_y ? size_t(h) : size_t(tn);
  const size_t line_stride = size_t(w) * (along_y ? 1 : h);
  const size_t plane_stride = size_t(w) * h;
  const size_t span = along_y ? size_t(w) : size_t(w) * h;

  for (size_t p = 0; p < planes; ++p)
    for (size_t c = 0; c < lines; ++c) {
      double* oline = dst + p * plane_stride + c * line_stride;
      std::fill(oline, oline + span, 0.0);
      for (int u = -r; u <= r; ++u) {
        const size_t s = size_t(reflect_index(int(c) + u, n));
        const double* iline = src + p * plane_stride + s * line_stride;
        const double kv = kernel[u + r];
        for (size_t i = 0; i < span; ++i) oline[i] += kv * iline[i];
      }
    }
  return out;
}

// Separable anisotropic smoothing: x and y at sigma2, t at tau2.
inline ScalarVolume smooth(const ScalarVolume& vol, ScalePair scale,
                           double truncation = 4.0) {
  const auto ks = gauss_kernel_1d(scale.sigma2, truncation);
  const auto kt = gauss_kernel_1d(scale.tau2, truncation);
  ScalarVolume out = convolve_axis(vol, Axis::x, ks);
  out = convolve_axis(out, Axis::y, ks);
  out = convolve_axis(out, Axis::t, kt);
  return out;
}

// First partials of a volume: lx, ly, lt.
struct GradientField {
  ScalarVolume lx, ly, lt;
};

// Central differences in the interior, one-sided at the faces.
inline GradientField gradient(const ScalarVolume& vol) {
  const int w = vol.width(), h = vol.height(), tn = vol.frames();
  if (w < 3 || h < 3 || tn < 3)
    throw std::invalid_argument("gradient: every dimension must be >= 3");

  GradientField g{ScalarVolume(w, h, tn), ScalarVolume(w, h, tn),
                  ScalarVolume(w, h, tn)};
  for (ScalarVolume* v : {&g.lx, &g.ly, &g.lt}) {
    v->origin_x = vol.origin_x;
    v->origin_y = vol.origin_y;
    v->origin_t = vol.origin_t;
  }

  auto diff = [](double prev, double next, bool one_sided_lo,
                 bool one_sided_hi, double here) {
    if (one_sided_lo) return next - here;
    if (one_sided_hi) return here - prev;
    return (next - prev) / 2.0;
  };

  for (int t = 0; t < tn; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double here = vol.at(x, y, t);
        g.lx.at(x, y, t) =
            diff(x > 0 ? vol.at(x - 1, y, t) : 0.0,
                 x < w - 1 ? vol.at(x + 1, y, t) : 0.0, x == 0, x == w - 1,
                 here);
        g.ly.at(x, y, t) =
            diff(y > 0 ? vol.at(x, y - 1, t) : 0.0,
                 y < h - 1 ? vol.at(x, y + 1, t) : 0.0, y == 0, y == h - 1,
                 here);
        g.lt.at(x, y, t) =
            diff(t > 0 ? vol.at(x, y, t - 1) : 0.0,
                 t < tn - 1 ? vol.at(x, y, t + 1) : 0.0, t == 0, t == tn - 1,
                 here);
      }
  return g;
}

}  // namespace stv
