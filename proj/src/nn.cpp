#include "robodiff/nn.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace robodiff {

namespace {
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

std::size_t shape_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Param: non-positive dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}
}  // namespace

Param& ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (find(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  params_.emplace_back();
  Param& p = params_.back();
  p.name = name;
  p.shape = std::move(shape);
  p.value.assign(shape_count(p.shape), 0.0);
  p.grad.assign(p.value.size(), 0.0);
  return p;
}

Param* ParamStore::find(const std::string& name) {
  for (Param& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const Param& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamStore::zero_grad() {
  for (Param& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const Param& p : params_) n += p.count();
  return n;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(Param* W, Param* b, int cin, int cout, int k)
    : W_(W), b_(b), cin_(cin), cout_(cout), k_(k), pad_(k / 2) {
  if (k % 2 == 0) throw std::invalid_argument("Conv2d: kernel must be odd");
  if (W_->count() != static_cast<std::size_t>(cout) * cin * k * k || b_->count() != static_cast<std::size_t>(cout))
    throw std::invalid_argument("Conv2d: weight shape mismatch for " + W_->name);
}

void Conv2d::build_col(const Tensor& x, std::vector<double>& col) const {
  const int hw = x.plane(), h = x.h, w = x.w;
  col.assign(static_cast<std::size_t>(cin_) * k_ * k_ * hw, 0.0);
  for (int c = 0; c < cin_; ++c) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const int r = (c * k_ + ky) * k_ + kx;
        double* dst = col.data() + static_cast<std::size_t>(r) * hw;
        const int dy = ky - pad_, dx = kx - pad_;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = y0; y < y1; ++y)
          std::memcpy(dst + static_cast<std::size_t>(y) * w + x0, &x.at(c, y + dy, x0 + dx),
                      static_cast<std::size_t>(x1 - x0) * sizeof(double));
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c != cin_) throw std::invalid_argument("Conv2d: input channel mismatch");
  x_ = x;
  const int hw = x.plane();
  Tensor y(cout_, x.h, x.w);
  MapM ym(y.data(), cout_, hw);
  if (k_ == 1) {
    MapC wm(W_->value.data(), cout_, cin_);
    MapC xm(x.data(), cin_, hw);
    ym.noalias() = wm * xm;
  } else {
    build_col(x, col_);
    MapC wm(W_->value.data(), cout_, cin_ * k_ * k_);
    MapC cm(col_.data(), cin_ * k_ * k_, hw);
    ym.noalias() = wm * cm;
  }
  for (int co = 0; co < cout_; ++co) ym.row(co).array() += b_->value[co];
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  if (gy.c != cout_ || gy.h != x_.h || gy.w != x_.w)
    throw std::invalid_argument("Conv2d: backward shape mismatch");
  const int hw = x_.plane();
  MapC gym(gy.data(), cout_, hw);
  for (int co = 0; co < cout_; ++co) b_->grad[co] += gym.row(co).sum();

  Tensor gx(cin_, x_.h, x_.w);
  if (k_ == 1) {
    MapC wm(W_->value.data(), cout_, cin_);
    MapC xm(x_.data(), cin_, hw);
    MapM gwm(W_->grad.data(), cout_, cin_);
    gwm.noalias() += gym * xm.transpose();
    MapM gxm(gx.data(), cin_, hw);
    gxm.noalias() = wm.transpose() * gym;
    return gx;
  }
  build_col(x_, col_);
  MapC cm(col_.data(), cin_ * k_ * k_, hw);
  MapM gwm(W_->grad.data(), cout_, cin_ * k_ * k_);
  gwm.noalias() += gym * cm.transpose();

  // gcol = W^T gy, then fold the patches back (col2im).
  static thread_local std::vector<double> gcol;
  gcol.assign(static_cast<std::size_t>(cin_) * k_ * k_ * hw, 0.0);
  MapM gcm(gcol.data(), cin_ * k_ * k_, hw);
  MapC wm(W_->value.data(), cout_, cin_ * k_ * k_);
  gcm.noalias() = wm.transpose() * gym;

  const int h = x_.h, w = x_.w;
  for (int c = 0; c < cin_; ++c) {
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const int r = (c * k_ + ky) * k_ + kx;
        const double* src = gcol.data() + static_cast<std::size_t>(r) * hw;
        const int dy = ky - pad_, dx = kx - pad_;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = y0; y < y1; ++y) {
          double* dst = &gx.at(c, y + dy, x0 + dx);
          const double* s = src + static_cast<std::size_t>(y) * w + x0;
          for (int i = 0; i < x1 - x0; ++i) dst[i] += s[i];
        }
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// DepthwiseConv2d

DepthwiseConv2d::DepthwiseConv2d(Param* W, Param* b, int c, int k)
    : W_(W), b_(b), c_(c), k_(k), pad_(k / 2) {
  if (k % 2 == 0) throw std::invalid_argument("DepthwiseConv2d: kernel must be odd");
  if (W_->count() != static_cast<std::size_t>(c) * k * k || b_->count() != static_cast<std::size_t>(c))
    throw std::invalid_argument("DepthwiseConv2d: weight shape mismatch for " + W_->name);
}

Tensor DepthwiseConv2d::forward(const Tensor& x) {
  if (x.c != c_) throw std::invalid_argument("DepthwiseConv2d: input channel mismatch");
  x_ = x;
  const int h = x.h, w = x.w;
  Tensor y(c_, h, w);
  for (int c = 0; c < c_; ++c) {
    const double* wk = W_->value.data() + static_cast<std::size_t>(c) * k_ * k_;
    const double bias = b_->value[c];
    for (int yy = 0; yy < h; ++yy) {
      const bool y_in = yy >= pad_ && yy < h - pad_;
      for (int xx = 0; xx < w; ++xx) {
        double acc = bias;
        if (y_in && xx >= pad_ && xx < w - pad_) {
          for (int ky = 0; ky < k_; ++ky) {
            const double* row = &x.at(c, yy + ky - pad_, xx - pad_);
            const double* wr = wk + ky * k_;
            for (int kx = 0; kx < k_; ++kx) acc += wr[kx] * row[kx];
          }
        } else {
          for (int ky = 0; ky < k_; ++ky) {
            const int sy = yy + ky - pad_;
            if (sy < 0 || sy >= h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int sx = xx + kx - pad_;
              if (sx < 0 || sx >= w) continue;
              acc += wk[ky * k_ + kx] * x.at(c, sy, sx);
            }
          }
        }
        y.at(c, yy, xx) = acc;
      }
    }
  }
  return y;
}

Tensor DepthwiseConv2d::backward(const Tensor& gy) {
  if (gy.c != c_ || gy.h != x_.h || gy.w != x_.w)
    throw std::invalid_argument("DepthwiseConv2d: backward shape mismatch");
  const int h = x_.h, w = x_.w;
  Tensor gx(c_, h, w);
  for (int c = 0; c < c_; ++c) {
    const double* wk = W_->value.data() + static_cast<std::size_t>(c) * k_ * k_;
    double* gwk = W_->grad.data() + static_cast<std::size_t>(c) * k_ * k_;
    double gb = 0.0;
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        const double g = gy.at(c, yy, xx);
        gb += g;
        for (int ky = 0; ky < k_; ++ky) {
          const int sy = yy + ky - pad_;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < k_; ++kx) {
            const int sx = xx + kx - pad_;
            if (sx < 0 || sx >= w) continue;
            gwk[ky * k_ + kx] += g * x_.at(c, sy, sx);
            gx.at(c, sy, sx) += g * wk[ky * k_ + kx];
          }
        }
      }
    }
    b_->grad[c] += gb;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// ChannelLayerNorm

ChannelLayerNorm::ChannelLayerNorm(Param* gain, Param* offset, int c, double eps)
    : gain_(gain), offset_(offset), c_(c), eps_(eps) {
  if (gain_->count() != static_cast<std::size_t>(c) || offset_->count() != static_cast<std::size_t>(c))
    throw std::invalid_argument("ChannelLayerNorm: affine shape mismatch");
}

Tensor ChannelLayerNorm::forward(const Tensor& x) {
  if (x.c != c_) throw std::invalid_argument("ChannelLayerNorm: channel mismatch");
  const int hw = x.plane();
  xhat_ = Tensor(x.c, x.h, x.w);
  inv_std_.assign(hw, 0.0);
  Tensor y(x.c, x.h, x.w);
  for (int p = 0; p < hw; ++p) {
    double mu = 0.0;
    for (int c = 0; c < c_; ++c) mu += x.v[static_cast<std::size_t>(c) * hw + p];
    mu /= c_;
    double var = 0.0;
    for (int c = 0; c < c_; ++c) {
      const double d = x.v[static_cast<std::size_t>(c) * hw + p] - mu;
      var += d * d;
    }
    var /= c_;
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[p] = inv;
    for (int c = 0; c < c_; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * hw + p;
      const double xh = (x.v[i] - mu) * inv;
      xhat_.v[i] = xh;
      y.v[i] = gain_->value[c] * xh + offset_->value[c];
    }
  }
  return y;
}

Tensor ChannelLayerNorm::backward(const Tensor& gy) {
  if (gy.c != c_ || gy.h != xhat_.h || gy.w != xhat_.w)
    throw std::invalid_argument("ChannelLayerNorm: backward shape mismatch");
  const int hw = gy.plane();
  Tensor gx(gy.c, gy.h, gy.w);
  for (int p = 0; p < hw; ++p) {
    double m1 = 0.0, m2 = 0.0;
    for (int c = 0; c < c_; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * hw + p;
      const double a = gy.v[i] * gain_->value[c];
      m1 += a;
      m2 += a * xhat_.v[i];
    }
    m1 /= c_;
    m2 /= c_;
    const double inv = inv_std_[p];
    for (int c = 0; c < c_; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * hw + p;
      const double a = gy.v[i] * gain_->value[c];
      gx.v[i] = (a - m1 - xhat_.v[i] * m2) * inv;
      gain_->grad[c] += gy.v[i] * xhat_.v[i];
      offset_->grad[c] += gy.v[i];
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Gelu

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Tensor Gelu::forward(const Tensor& x) {
  x_ = x;
  Tensor y(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.v[i];
    y.v[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  return y;
}

Tensor Gelu::backward(const Tensor& gy) {
  require_same_shape(gy, x_, "Gelu::backward");
  Tensor gx(gy.c, gy.h, gy.w);
  for (std::size_t i = 0; i < gy.size(); ++i) {
    const double v = x_.v[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
    gx.v[i] = gy.v[i] * (cdf + v * pdf);
  }
  return gx;
}

// ---------------------------------------------------------------------------
// VecLinear

VecLinear::VecLinear(Param* W, Param* b, int in, int out) : W_(W), b_(b), in_(in), out_(out) {
  if (W_->count() != static_cast<std::size_t>(in) * out || b_->count() != static_cast<std::size_t>(out))
    throw std::invalid_argument("VecLinear: weight shape mismatch for " + W_->name);
}

std::vector<double> VecLinear::forward(const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != in_)
    throw std::invalid_argument("VecLinear: input width mismatch for " + W_->name);
  x_ = x;
  std::vector<double> y(out_);
  for (int o = 0; o < out_; ++o) {
    double acc = b_->value[o];
    const double* wr = W_->value.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
  return y;
}

std::vector<double> VecLinear::backward(const std::vector<double>& gy) {
  if (static_cast<int>(gy.size()) != out_)
    throw std::invalid_argument("VecLinear: output grad width mismatch");
  std::vector<double> gx(in_, 0.0);
  for (int o = 0; o < out_; ++o) {
    const double g = gy[o];
    b_->grad[o] += g;
    double* gwr = W_->grad.data() + static_cast<std::size_t>(o) * in_;
    const double* wr = W_->value.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) {
      gwr[i] += g * x_[i];
      gx[i] += g * wr[i];
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Nearest-neighbor interpolation

Tensor interp_nearest(const Tensor& m, int H, int W) {
  if (H < 1 || W < 1) throw std::invalid_argument("interp_nearest: bad target size");
  Tensor out(m.c, H, W);
  for (int c = 0; c < m.c; ++c) {
    for (int y = 0; y < H; ++y) {
      const int sy = static_cast<int>(static_cast<long long>(y) * m.h / H);
      for (int x = 0; x < W; ++x) {
        const int sx = static_cast<int>(static_cast<long long>(x) * m.w / W);
        out.at(c, y, x) = m.at(c, sy, sx);
      }
    }
  }
  return out;
}

Tensor interp_nearest_backward(const Tensor& gy, int h, int w) {
  Tensor gx(gy.c, h, w);
  for (int c = 0; c < gy.c; ++c) {
    for (int y = 0; y < gy.h; ++y) {
      const int sy = static_cast<int>(static_cast<long long>(y) * h / gy.h);
      for (int x = 0; x < gy.w; ++x) {
        const int sx = static_cast<int>(static_cast<long long>(x) * w / gy.w);
        gx.at(c, sy, sx) += gy.at(c, y, x);
      }
    }
  }
  return gx;
}

void init_normal(Param& p, double stddev, Rng& rng) {
  for (double& v : p.value) v = stddev * rng.normal();
}

}  // namespace robodiff
