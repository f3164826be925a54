#pragma once

#include <cstdint>
#include <vector>

#include "robodiff/embeddings.hpp"
#include "robodiff/nn.hpp"
#include "robodiff/tensor.hpp"

namespace robodiff {

// Structural hyperparameters of the denoising network. use_mask / use_pose
// select the conditioning variant (mask_pose / mask / pose / none).
struct BlockConfig {
  int n_blocks = 8;
  int width = 64;       // channels inside every block
  int cond_width = 64;  // D, width of the fused conditioning vector
  int mask_classes = 1; // S
  bool use_mask = true;
  bool use_pose = true;
  int freq_pairs = 8;   // L: (sin, cos) pairs per embedded scalar
  int expansion = 2;    // pointwise expansion factor

  void validate() const;
  // width of the concatenation fed to the fusion affine: 2L for t, 2L for dk,
  // plus D for the pose embedding when enabled
  int cond_input_width() const { return 4 * freq_pairs + (use_pose ? cond_width : 0); }
};

// Mask regulation branch: the mask is conv-embedded, resized to the activation
// grid, layer-normalized, and turned into per-pixel scale/shift maps;
// out = x (x) (1 + gamma) (+) sigma, so zero gamma/sigma convs are an exact
// identity.
struct Spade {
  Conv2d pre;    // mask_classes -> width, at mask resolution
  ChannelLayerNorm ln;
  Conv2d gamma;  // width -> width
  Conv2d sigma;  // width -> width, applied to the gamma map

  Tensor forward(const Tensor& x, const Tensor& m);
  Tensor backward(const Tensor& gy);

 private:
  int mask_h_ = 0, mask_w_ = 0;
  Tensor x_, gamma_map_;
};

// One improved ConvNext block: depthwise 7x7 -> (SPADE) -> channel layernorm
// -> conditioning scale-shift -> 1x1 expand -> GELU -> 1x1 project, with a
// residual connection around the whole thing.
struct Block {
  bool use_mask = false;
  int width = 0;
  DepthwiseConv2d dw;
  Spade spade;
  ChannelLayerNorm ln;
  VecLinear cond;  // D -> 2*width (scale, shift)
  Conv2d pw1, pw2;
  Gelu gelu;

  Tensor forward(const Tensor& x, const std::vector<double>& cond_vec, const Tensor* m);
  // Returns the input gradient and leaves d(loss)/d(cond_vec) in cond_grad.
  Tensor backward(const Tensor& gy);

  std::vector<double> cond_grad;

 private:
  Tensor u3_;
  std::vector<double> sb_;
};

// The noise-prediction network eps_theta. Input is the condition frame and the
// noisy frame concatenated to 6 channels; every block receives the same fused
// conditioning vector and, when enabled, the semantic mask.
class Backbone {
 public:
  explicit Backbone(const BlockConfig& cfg);

  // Layers hold pointers into the parameter store: moving keeps them valid
  // (deque elements never relocate), copying would not.
  Backbone(const Backbone&) = delete;
  Backbone& operator=(const Backbone&) = delete;
  Backbone(Backbone&&) = default;
  Backbone& operator=(Backbone&&) = default;

  // Deterministic initialization: He-scaled normals for the trunk convs and
  // embedding maps; zeros for the output projection, the per-block
  // conditioning affines and the SPADE gamma/sigma convs, so the freshly
  // initialized network is conditioning-neutral and SPADE is an exact no-op.
  void init_weights(std::uint64_t seed);

  // t is embedded as t/T; dk is embedded raw. dp/mask are ignored by variants
  // that do not use them and required by variants that do.
  Tensor forward(const Tensor& cond_frame, const Tensor& noisy_frame, int t, int T, double dk,
                 const PoseDelta* dp = nullptr, const Tensor* mask = nullptr);
  // Accumulates parameter gradients; returns the gradient w.r.t. the
  // 6-channel concatenated input.
  Tensor backward(const Tensor& gy);

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const BlockConfig& config() const { return cfg_; }

 private:
  BlockConfig cfg_;
  ParamStore store_;
  Conv2d in_proj_, out_proj_;
  VecLinear pose_lin_, fuse_lin_;
  std::vector<Block> blocks_;
  bool has_forward_ = false;
};

}  // namespace robodiff
