#pragma once

// Spatiotemporal interest-point detection.
//
// Per scale (sigma_l^2, tau_l^2): smooth -> gradients -> second-moment
// matrix integrated at (s*sigma_l^2, s*tau_l^2) -> response
// H = det(mu) - k*trace(mu)^3, then keep voxels with H >= threshold that
// are strict maxima inside the per-scale NMS window. Across scales a
// stronger point suppresses weaker ones within its NMS window at the same
// or an adjacent entry of the scale list (adjacency = consecutive indices
// in the configured list; responses are compared raw, without scale
// normalization).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stv/scalespace.hpp"
#include "stv/util.hpp"
#include "stv/volume.hpp"

namespace stv {

struct InterestPoint {
  int x = 0, y = 0, t = 0;
  double sigma2 = 0.0, tau2 = 0.0;
  double response = 0.0;
};

// distinct entries of the symmetric 3x3 second-moment matrix
struct MomentField {
  ScalarVolume xx, yy, tt, xy, xt, yt;
};

struct NmsRadius {
  int rx = 0, ry = 0, rt = 0;
};

struct DetectorParams {
  // admissible k is bounded by a*b/(1+a+b)^3 over the eigenvalue ratios
  // a, b; the well-conditioned case caps it at 1/27, and a small value
  // biases toward recall.
  double k = 5e-4;
  std::vector<ScalePair> scales = {{4, 2}, {4, 4}, {8, 2},  {8, 4},
                                   {16, 2}, {16, 4}, {32, 2}, {32, 4}};
  double integration_factor = 4.0;  // sigma_i^2 = factor * sigma_l^2
  double threshold = 1e-9;
  int top_n = 0;  // 0 = keep everything above threshold
  double truncation = 4.0;
  // zero components derive from the scale: ceil(2*sigma), ceil(2*tau)
  NmsRadius nms_radius{0, 0, 0};
};

inline NmsRadius nms_radius(ScalePair scale) {
  return {static_cast<int>(std::ceil(2.0 * std::sqrt(scale.sigma2))),
          static_cast<int>(std::ceil(2.0 * std::sqrt(scale.sigma2))),
          static_cast<int>(std::ceil(2.0 * std::sqrt(scale.tau2)))};
}

inline NmsRadius nms_radius(ScalePair scale, const DetectorParams& p) {
  NmsRadius r = nms_radius(scale);
  if (p.nms_radius.rx > 0) r.rx = p.nms_radius.rx;
  if (p.nms_radius.ry > 0) r.ry = p.nms_radius.ry;
  if (p.nms_radius.rt > 0) r.rt = p.nms_radius.rt;
  return r;
}

// Gaussian-integrated outer products of the gradients.
inline MomentField second_moment(const GradientField& g, ScalePair integration,
                                 double truncation = 4.0) {
  const int w = g.lx.width(), h = g.lx.height(), tn = g.lx.frames();
  auto product = [&](const ScalarVolume& a, const ScalarVolume& b) {
    ScalarVolume out(w, h, tn);
    for (size_t i = 0; i < out.size(); ++i)
      out.data()[i] = a.data()[i] * b.data()[i];
    return smooth(out, integration, truncation);
  };
  return MomentField{product(g.lx, g.lx), product(g.ly, g.ly),
                     product(g.lt, g.lt), product(g.lx, g.ly),
                     product(g.lx, g.lt), product(g.ly, g.lt)};
}

// H = det(mu) - k*trace(mu)^3 via the closed-form 3x3 determinant.
inline ScalarVolume harris_response(const MomentField& m, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("harris_response: k must be > 0");
  ScalarVolume out(m.xx.width(), m.xx.height(), m.xx.frames());
  for (size_t i = 0; i < out.size(); ++i) {
    const double xx = m.xx.data()[i], yy = m.yy.data()[i], tt = m.tt.data()[i];
    const double xy = m.xy.data()[i], xt = m.xt.data()[i], yt = m.yt.data()[i];
    const double det = xx * (yy * tt - yt * yt) - xy * (xy * tt - yt * xt) +
                       xt * (xy * yt - yy * xt);
    const double tr = xx + yy + tt;
    out.data()[i] = det - k * tr * tr * tr;
  }
  return out;
}

namespace detail {

inline bool strict_local_max(const ScalarVolume& h, int x, int y, int t,
                             NmsRadius r) {
  const double v = h.at(x, y, t);
  const int x0 = std::max(0, x - r.rx), x1 = std::min(h.width() - 1, x + r.rx);
  const int y0 = std::max(0, y - r.ry), y1 = std::min(h.height() - 1, y + r.ry);
  const int t0 = std::max(0, t - r.rt), t1 = std::min(h.frames() - 1, t + r.rt);
  for (int tt = t0; tt <= t1; ++tt)
    for (int yy = y0; yy <= y1; ++yy)
      for (int xx = x0; xx <= x1; ++xx) {
        if (xx == x && yy == y && tt == t) continue;
        if (h.at(xx, yy, tt) >= v) return false;
      }
  return true;
}

}  // namespace detail

inline std::vector<InterestPoint> detect(const ScalarVolume& vol,
                                         const DetectorParams& p) {
  if (p.scales.empty()) throw std::invalid_argument("detect: no scales");
  if (!(p.threshold >= 0.0))
    throw std::invalid_argument("detect: threshold must be >= 0");

  struct Candidate {
    InterestPoint pt;
    int scale_idx;
  };
  std::vector<Candidate> cands;

  for (size_t si = 0; si < p.scales.size(); ++si) {
    const ScalePair sc = p.scales[si];
    const NmsRadius r = nms_radius(sc, p);
    if (vol.width() < 2 * r.rx + 1 || vol.height() < 2 * r.ry + 1 ||
        vol.frames() < 2 * r.rt + 1)
      throw std::invalid_argument(
          "detect: volume smaller than the NMS window at scale (" +
          fmt_g17(sc.sigma2) + ", " + fmt_g17(sc.tau2) + ")");

    const ScalarVolume smoothed = smooth(vol, sc, p.truncation);
    const GradientField grad = gradient(smoothed);
    const ScalePair integration{p.integration_factor * sc.sigma2,
                                p.integration_factor * sc.tau2};
    const MomentField mu = second_moment(grad, integration, p.truncation);
    const ScalarVolume h = harris_response(mu, p.k);

    for (int t = 0; t < h.frames(); ++t)
      for (int y = 0; y < h.height(); ++y)
        for (int x = 0; x < h.width(); ++x) {
          const double v = h.at(x, y, t);
          if (v < p.threshold) continue;
          if (!detail::strict_local_max(h, x, y, t, r)) continue;
          cands.push_back(
              {InterestPoint{x, y, t, sc.sigma2, sc.tau2, v}, int(si)});
        }
  }

  // total order: response desc, then scale/t/y/x for determinism
  std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                           const Candidate& b) {
    if (a.pt.response != b.pt.response) return a.pt.response > b.pt.response;
    if (a.scale_idx != b.scale_idx) return a.scale_idx < b.scale_idx;
    if (a.pt.t != b.pt.t) return a.pt.t < b.pt.t;
    if (a.pt.y != b.pt.y) return a.pt.y < b.pt.y;
    return a.pt.x < b.pt.x;
  });

  // greedy cross-scale suppression inside the stronger point's window
  std::vector<Candidate> kept;
  for (const Candidate& c : cands) {
    bool suppressed = false;
    for (const Candidate& k : kept) {
      if (std::abs(k.scale_idx - c.scale_idx) > 1) continue;
      const NmsRadius r = nms_radius(p.scales[k.scale_idx], p);
      if (std::abs(c.pt.x - k.pt.x) <= r.rx &&
          std::abs(c.pt.y - k.pt.y) <= r.ry &&
          std::abs(c.pt.t - k.pt.t) <= r.rt) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(c);
  }

  std::vector<InterestPoint> out;
  out.reserve(kept.size());
  for (const Candidate& c : kept) out.push_back(c.pt);
  if (p.top_n > 0 && int(out.size()) > p.top_n) out.resize(p.top_n);
  return out;
}

// ---------------------------------------------------------------------------
// TSV serialization: clip-id, x, y, t, sigma2, tau2, response

inline std::string points_to_tsv(const std::string& clip_id,
                                 const std::vector<InterestPoint>& pts) {
  std::string out;
  for (const auto& p : pts) {
    out += clip_id;
    out += '\t';
    out += std::to_string(p.x) + '\t' + std::to_string(p.y) + '\t' +
           std::to_string(p.t) + '\t';
    out += fmt_g17(p.sigma2) + '\t' + fmt_g17(p.tau2) + '\t' +
           fmt_g17(p.response) + '\n';
  }
  return out;
}

inline std::vector<InterestPoint> points_from_tsv(const std::string& tsv,
                                                  std::string* clip_id = nullptr) {
  std::vector<InterestPoint> out;
  for (const auto& line : split(tsv, '\n')) {
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 7)
      throw std::runtime_error("interest-point TSV: want 7 columns");
    if (clip_id) *clip_id = cols[0];
    InterestPoint p;
    p.x = int(parse_long(cols[1], "points tsv"));
    p.y = int(parse_long(cols[2], "points tsv"));
    p.t = int(parse_long(cols[3], "points tsv"));
    p.sigma2 = parse_double(cols[4], "points tsv");
    p.tau2 = parse_double(cols[5], "points tsv");
    p.response = parse_double(cols[6], "points tsv");
    out.push_back(p);
  }
  return out;
}

}  // namespace stv
