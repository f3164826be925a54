#pragma once

#include <deque>
#include <string>
#include <vector>

#include "robodiff/rng.hpp"
#include "robodiff/tensor.hpp"

namespace robodiff {

struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t count() const { return value.size(); }
};

// Owns every learnable tensor of a network plus its gradient slot. The
// insertion order is the canonical serialization and optimizer order.
class ParamStore {
 public:
  Param& add(const std::string& name, std::vector<int> shape);
  std::size_t size() const { return params_.size(); }
  Param& at(std::size_t i) { return params_[i]; }
  const Param& at(std::size_t i) const { return params_[i]; }
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  void zero_grad();
  std::size_t total_count() const;

 private:
  std::deque<Param> params_;  // deque keeps addresses stable; layers hold pointers
};

// 2D convolution, odd kernel, stride 1, zero same-padding. im2col + GEMM.
// backward() must follow the forward() it differentiates; it accumulates into
// the parameter grads and returns the input gradient.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(Param* W, Param* b, int cin, int cout, int k);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);
  int out_channels() const { return cout_; }

 private:
  void build_col(const Tensor& x, std::vector<double>& col) const;
  Param* W_ = nullptr;
  Param* b_ = nullptr;
  int cin_ = 0, cout_ = 0, k_ = 0, pad_ = 0;
  Tensor x_;
  std::vector<double> col_;
};

// Depthwise convolution, odd kernel, stride 1, zero same-padding.
class DepthwiseConv2d {
 public:
  DepthwiseConv2d() = default;
  DepthwiseConv2d(Param* W, Param* b, int c, int k);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Param* W_ = nullptr;
  Param* b_ = nullptr;
  int c_ = 0, k_ = 0, pad_ = 0;
  Tensor x_;
};

// Layernorm over the channel dimension at each spatial location, learned
// per-channel gain/offset.
class ChannelLayerNorm {
 public:
  ChannelLayerNorm() = default;
  ChannelLayerNorm(Param* gain, Param* offset, int c, double eps = 1e-6);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Param* gain_ = nullptr;
  Param* offset_ = nullptr;
  int c_ = 0;
  double eps_ = 1e-6;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class Gelu {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Tensor x_;
};

// Dense map for conditioning vectors: y = W x + b, W row-major (out, in).
class VecLinear {
 public:
  VecLinear() = default;
  VecLinear(Param* W, Param* b, int in, int out);
  std::vector<double> forward(const std::vector<double>& x);
  std::vector<double> backward(const std::vector<double>& gy);

 private:
  Param* W_ = nullptr;
  Param* b_ = nullptr;
  int in_ = 0, out_ = 0;
  std::vector<double> x_;
};

// Nearest-neighbor resize to (H, W); source pixel of target (y, x) is
// (y*h/H, x*w/W) in integer arithmetic.
Tensor interp_nearest(const Tensor& m, int H, int W);
// Scatter-add adjoint of the above back to a (c, h, w) grid.
Tensor interp_nearest_backward(const Tensor& gy, int h, int w);

void init_normal(Param& p, double stddev, Rng& rng);

}  // namespace robodiff
