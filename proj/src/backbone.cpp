#include "robodiff/backbone.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace robodiff {

void BlockConfig::validate() const {
  if (n_blocks < 1) throw std::invalid_argument("BlockConfig: n_blocks must be >= 1");
  if (width < 4) throw std::invalid_argument("BlockConfig: width must be >= 4");
  if (cond_width < 1) throw std::invalid_argument("BlockConfig: cond_width must be >= 1");
  if (mask_classes < 1) throw std::invalid_argument("BlockConfig: mask_classes must be >= 1");
  if (freq_pairs < 1) throw std::invalid_argument("BlockConfig: freq_pairs must be >= 1");
  if (expansion < 1) throw std::invalid_argument("BlockConfig: expansion must be >= 1");
}

// ---------------------------------------------------------------------------
// Spade

Tensor Spade::forward(const Tensor& x, const Tensor& m) {
  mask_h_ = m.h;
  mask_w_ = m.w;
  x_ = x;
  Tensor embedded = pre.forward(m);
  Tensor resized = interp_nearest(embedded, x.h, x.w);
  Tensor mbar = ln.forward(resized);
  gamma_map_ = gamma.forward(mbar);
  Tensor sigma_map = sigma.forward(gamma_map_);
  Tensor out(x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.v[i] = x.v[i] * (1.0 + gamma_map_.v[i]) + sigma_map.v[i];
  return out;
}

Tensor Spade::backward(const Tensor& gy) {
  require_same_shape(gy, x_, "Spade::backward");
  Tensor gx(gy.c, gy.h, gy.w);
  for (std::size_t i = 0; i < gy.size(); ++i) gx.v[i] = gy.v[i] * (1.0 + gamma_map_.v[i]);

  // gamma feeds the output twice: through the product with x and through the
  // sigma conv.
  Tensor ggamma = sigma.backward(gy);
  for (std::size_t i = 0; i < gy.size(); ++i) ggamma.v[i] += gy.v[i] * x_.v[i];

  Tensor gmbar = gamma.backward(ggamma);
  Tensor gresized = ln.backward(gmbar);
  Tensor gembedded = interp_nearest_backward(gresized, mask_h_, mask_w_);
  pre.backward(gembedded);  // mask is data, its gradient is discarded
  return gx;
}

// ---------------------------------------------------------------------------
// Block

Tensor Block::forward(const Tensor& x, const std::vector<double>& cond_vec, const Tensor* m) {
  if (m && !use_mask) throw std::invalid_argument("Block: mask supplied but use_mask is false");
  if (!m && use_mask) throw std::invalid_argument("Block: mask required but missing");

  Tensor u = dw.forward(x);
  if (use_mask) u = spade.forward(u, *m);
  u3_ = ln.forward(u);
  sb_ = cond.forward(cond_vec);  // (scale | shift), each `width` long
  const int hw = u3_.plane();
  Tensor u4(u3_.c, u3_.h, u3_.w);
  for (int c = 0; c < width; ++c) {
    const double s = 1.0 + sb_[c], b = sb_[width + c];
    const double* src = u3_.data() + static_cast<std::size_t>(c) * hw;
    double* dst = u4.data() + static_cast<std::size_t>(c) * hw;
    for (int p = 0; p < hw; ++p) dst[p] = src[p] * s + b;
  }
  u = pw2.forward(gelu.forward(pw1.forward(u4)));
  for (std::size_t i = 0; i < u.size(); ++i) u.v[i] += x.v[i];
  return u;
}

Tensor Block::backward(const Tensor& gy) {
  Tensor g = pw1.backward(gelu.backward(pw2.backward(gy)));

  const int hw = u3_.plane();
  std::vector<double> gsb(2 * static_cast<std::size_t>(width), 0.0);
  Tensor g3(u3_.c, u3_.h, u3_.w);
  for (int c = 0; c < width; ++c) {
    const double s = 1.0 + sb_[c];
    const double* gp = g.data() + static_cast<std::size_t>(c) * hw;
    const double* up = u3_.data() + static_cast<std::size_t>(c) * hw;
    double* dst = g3.data() + static_cast<std::size_t>(c) * hw;
    double gscale = 0.0, gshift = 0.0;
    for (int p = 0; p < hw; ++p) {
      gscale += gp[p] * up[p];
      gshift += gp[p];
      dst[p] = gp[p] * s;
    }
    gsb[c] = gscale;
    gsb[width + c] = gshift;
  }
  cond_grad = cond.backward(gsb);

  g = ln.backward(g3);
  if (use_mask) g = spade.backward(g);
  g = dw.backward(g);
  for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += gy.v[i];  // residual
  return g;
}

// ---------------------------------------------------------------------------
// Backbone

Backbone::Backbone(const BlockConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int W = cfg_.width, D = cfg_.cond_width, S = cfg_.mask_classes, E = cfg_.expansion;

  Param& ipw = store_.add("in_proj.W", {W, 6, 3, 3});
  Param& ipb = store_.add("in_proj.b", {W});
  in_proj_ = Conv2d(&ipw, &ipb, 6, W, 3);

  if (cfg_.use_pose) {
    Param& pw = store_.add("embed.pose.W", {D, 6});
    Param& pb = store_.add("embed.pose.b", {D});
    pose_lin_ = VecLinear(&pw, &pb, 6, D);
  }
  Param& fw = store_.add("embed.fuse.W", {D, cfg_.cond_input_width()});
  Param& fb = store_.add("embed.fuse.b", {D});
  fuse_lin_ = VecLinear(&fw, &fb, cfg_.cond_input_width(), D);

  // Parameters are registered in a fixed order; the store's insertion order is
  // the serialization and initialization order, so each add() is sequenced
  // explicitly.
  auto pair = [this](const std::string& wname, std::vector<int> wshape, const std::string& bname,
                     std::vector<int> bshape) {
    Param& w = store_.add(wname, std::move(wshape));
    Param& b = store_.add(bname, std::move(bshape));
    return std::pair<Param*, Param*>{&w, &b};
  };

  blocks_.resize(cfg_.n_blocks);
  for (int i = 0; i < cfg_.n_blocks; ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    Block& blk = blocks_[i];
    blk.use_mask = cfg_.use_mask;
    blk.width = W;
    auto [dww, dwb] = pair(p + "dw.W", {W, 7, 7}, p + "dw.b", {W});
    blk.dw = DepthwiseConv2d(dww, dwb, W, 7);
    if (cfg_.use_mask) {
      auto [prw, prb] = pair(p + "spade.pre.W", {W, S, 3, 3}, p + "spade.pre.b", {W});
      blk.spade.pre = Conv2d(prw, prb, S, W, 3);
      auto [lng, lno] = pair(p + "spade.ln.gain", {W}, p + "spade.ln.offset", {W});
      blk.spade.ln = ChannelLayerNorm(lng, lno, W);
      auto [gaw, gab] = pair(p + "spade.gamma.W", {W, W, 3, 3}, p + "spade.gamma.b", {W});
      blk.spade.gamma = Conv2d(gaw, gab, W, W, 3);
      auto [siw, sib] = pair(p + "spade.sigma.W", {W, W, 3, 3}, p + "spade.sigma.b", {W});
      blk.spade.sigma = Conv2d(siw, sib, W, W, 3);
    }
    auto [lng, lno] = pair(p + "ln.gain", {W}, p + "ln.offset", {W});
    blk.ln = ChannelLayerNorm(lng, lno, W);
    auto [cw, cb] = pair(p + "cond.W", {2 * W, D}, p + "cond.b", {2 * W});
    blk.cond = VecLinear(cw, cb, D, 2 * W);
    auto [p1w, p1b] = pair(p + "pw1.W", {E * W, W, 1, 1}, p + "pw1.b", {E * W});
    blk.pw1 = Conv2d(p1w, p1b, W, E * W, 1);
    auto [p2w, p2b] = pair(p + "pw2.W", {W, E * W, 1, 1}, p + "pw2.b", {W});
    blk.pw2 = Conv2d(p2w, p2b, E * W, W, 1);
  }

  Param& opw = store_.add("out_proj.W", {3, W, 3, 3});
  Param& opb = store_.add("out_proj.b", {3});
  out_proj_ = Conv2d(&opw, &opb, W, 3, 3);
}

void Backbone::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < store_.size(); ++i) {
    Param& p = store_.at(i);
    const std::string& n = p.name;
    const bool is_bias = n.ends_with(".b") || n.ends_with(".offset");
    const bool zero_init = n == "out_proj.W" || n.find(".cond.") != std::string::npos ||
                           n.find("spade.gamma") != std::string::npos ||
                           n.find("spade.sigma") != std::string::npos;
    if (n.ends_with(".gain")) {
      std::fill(p.value.begin(), p.value.end(), 1.0);
    } else if (is_bias || zero_init) {
      std::fill(p.value.begin(), p.value.end(), 0.0);
    } else {
      // He scaling over the fan-in: trailing shape dims past the first.
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < p.shape.size(); ++d) fan_in *= p.shape[d];
      init_normal(p, std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
    }
  }
}

Tensor Backbone::forward(const Tensor& cond_frame, const Tensor& noisy_frame, int t, int T,
                         double dk, const PoseDelta* dp, const Tensor* mask) {
  if (cond_frame.c != 3 || noisy_frame.c != 3)
    throw std::invalid_argument("Backbone: frames must have 3 channels");
  if (cond_frame.h != noisy_frame.h || cond_frame.w != noisy_frame.w)
    throw std::invalid_argument("Backbone: condition and noisy frame sizes differ");
  if (cond_frame.h < 8 || cond_frame.w < 8)
    throw std::invalid_argument("Backbone: frames must be at least 8x8");
  if (T < 1 || t < 1 || t > T) throw std::invalid_argument("Backbone: step t outside [1, T]");
  if (cfg_.use_pose && !dp) throw std::invalid_argument("Backbone: variant needs a pose delta");
  if (cfg_.use_mask && !mask) throw std::invalid_argument("Backbone: variant needs a mask");
  if (cfg_.use_mask && mask->c != cfg_.mask_classes)
    throw std::invalid_argument("Backbone: mask has wrong class count");

  // One conditioning vector per forward pass, shared by all blocks.
  std::vector<double> fuse_in = sinusoidal_embed(static_cast<double>(t) / T, cfg_.freq_pairs);
  std::vector<double> k_emb = sinusoidal_embed(dk, cfg_.freq_pairs);
  fuse_in.insert(fuse_in.end(), k_emb.begin(), k_emb.end());
  if (cfg_.use_pose) {
    const auto a = dp->to_array();
    std::vector<double> p_emb = pose_lin_.forward(std::vector<double>(a.begin(), a.end()));
    fuse_in.insert(fuse_in.end(), p_emb.begin(), p_emb.end());
  }
  std::vector<double> cond_vec = fuse_lin_.forward(fuse_in);

  Tensor x6(6, cond_frame.h, cond_frame.w);
  std::copy(cond_frame.v.begin(), cond_frame.v.end(), x6.v.begin());
  std::copy(noisy_frame.v.begin(), noisy_frame.v.end(),
            x6.v.begin() + static_cast<std::ptrdiff_t>(cond_frame.size()));

  Tensor h = in_proj_.forward(x6);
  const Tensor* m = cfg_.use_mask ? mask : nullptr;
  for (Block& blk : blocks_) h = blk.forward(h, cond_vec, m);
  has_forward_ = true;
  return out_proj_.forward(h);
}

Tensor Backbone::backward(const Tensor& gy) {
  if (!has_forward_) throw std::logic_error("Backbone: backward without a preceding forward");
  Tensor g = out_proj_.backward(gy);
  std::vector<double> cond_grad(cfg_.cond_width, 0.0);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    g = it->backward(g);
    for (int i = 0; i < cfg_.cond_width; ++i) cond_grad[i] += it->cond_grad[i];
  }
  std::vector<double> gfuse_in = fuse_lin_.backward(cond_grad);
  if (cfg_.use_pose)
    pose_lin_.backward(std::vector<double>(gfuse_in.end() - cfg_.cond_width, gfuse_in.end()));
  return in_proj_.backward(g);
}

}  // namespace robodiff
