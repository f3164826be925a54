#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace robodiff {

// Dense (channels, height, width) tensor of doubles, channel-major contiguous.
// Frames are 3-channel with values nominally in [-1, 1]; masks are one channel
// per semantic class with values in {0, 1}; network activations use the same
// container.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, fill) {
    if (c_ < 0 || h_ < 0 || w_ < 0) throw std::invalid_argument("Tensor: negative dimension");
  }

  std::size_t size() const { return v.size(); }
  int plane() const { return h * w; }

  double& at(int ci, int y, int x) { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  const double& at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  Tensor& clamp(double lo, double hi) {
    for (double& x : v) x = x < lo ? lo : (x > hi ? hi : x);
    return *this;
  }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace robodiff
