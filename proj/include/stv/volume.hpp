#pragma once

// Dense 3D (x, y, t) sample grid — the carrier for grayscale video, smoothed
// responses and gradient fields. x varies fastest in memory, then y, then t.

#include <cassert>
#include <cstddef>
#include <vector>

namespace stv {

template <typename T>
class Volume3 {
 public:
  Volume3() = default;

  Volume3(int w, int h, int t, T fill = T{})
      : w_(w), h_(h), t_(t), data_(std::size_t(w) * h * t, fill) {
    assert(w > 0 && h > 0 && t > 0);
  }

  int width() const { return w_; }
  int height() const { return h_; }
  int frames() const { return t_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // offset of this volume inside its parent clip (nonzero for crops)
  int origin_x = 0, origin_y = 0, origin_t = 0;

  T& at(int x, int y, int t) {
    assert(in_bounds(x, y, t));
    return data_[index(x, y, t)];
  }
  const T& at(int x, int y, int t) const {
    assert(in_bounds(x, y, t));
    return data_[index(x, y, t)];
  }
  T operator()(int x, int y, int t) const { return at(x, y, t); }

  // value at parent-clip coordinates
  const T& at_abs(int x, int y, int t) const {
    return at(x - origin_x, y - origin_y, t - origin_t);
  }

  bool in_bounds(int x, int y, int t) const {
    return x >= 0 && x < w_ && y >= 0 && y < h_ && t >= 0 && t < t_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_dims(const Volume3& o) const {
    return w_ == o.w_ && h_ == o.h_ && t_ == o.t_;
  }

  // inclusive-bound crop; the result remembers its parent-clip origin
  Volume3 crop(int x0, int x1, int y0, int y1, int t0, int t1) const {
    assert(x0 <= x1 && y0 <= y1 && t0 <= t1);
    assert(in_bounds(x0, y0, t0) && in_bounds(x1, y1, t1));
    Volume3 out(x1 - x0 + 1, y1 - y0 + 1, t1 - t0 + 1);
    out.origin_x = origin_x + x0;
    out.origin_y = origin_y + y0;
    out.origin_t = origin_t + t0;
    for (int t = t0; t <= t1; ++t)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          out.at(x - x0, y - y0, t - t0) = at(x, y, t);
    return out;
  }

 private:
  std::size_t index(int x, int y, int t) const {
    return (std::size_t(t) * h_ + y) * w_ + x;
  }

  int w_ = 0, h_ = 0, t_ = 0;
  std::vector<T> data_;
};

using ScalarVolume = Volume3<double>;

}  // namespace stv
