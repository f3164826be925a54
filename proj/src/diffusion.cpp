#include "robodiff/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace robodiff {

NoiseDraw draw_noise(int c, int h, int w, std::uint64_t seed) {
  NoiseDraw d;
  d.rng_seed = seed;
  d.eps = Tensor(c, h, w);
  Rng rng(seed);
  rng.fill_normal(d.eps);
  return d;
}

Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps, const VarianceSchedule& s) {
  s.check_step(t);
  require_same_shape(x0, eps, "forward_sample");
  double ab = s.alpha_bar_at(t);
  double ca = std::sqrt(ab), ce = std::sqrt(1.0 - ab);
  Tensor out(x0.c, x0.h, x0.w);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = ca * x0.v[i] + ce * eps.v[i];
  return out;
}

Tensor forward_sample(const Tensor& x0, int t, const NoiseDraw& eps, const VarianceSchedule& s) {
  return forward_sample(x0, t, eps.eps, s);
}

Tensor iterate_forward(const Tensor& x0, int t, const VarianceSchedule& s, Rng& rng) {
  if (t < 0 || t > s.T)
    throw std::invalid_argument("iterate_forward: t outside [0, T]");
  Tensor x = x0;
  for (int k = 1; k <= t; ++k) {
    double ca = std::sqrt(1.0 - s.beta[k - 1]);
    double ce = std::sqrt(s.beta[k - 1]);
    for (double& xi : x.v) xi = ca * xi + ce * rng.normal();
  }
  return x;
}

PosteriorParams posterior_params(const Tensor& x0, const Tensor& xt, int t,
                                 const VarianceSchedule& s) {
  s.check_step(t);
  require_same_shape(x0, xt, "posterior_params");
  double ab_t = s.alpha_bar_at(t);
  double ab_prev = s.alpha_bar_at(t - 1);
  double beta_t = s.beta_at(t);
  double alpha_t = s.alpha_at(t);
  double denom = 1.0 - ab_t;
  double c0 = std::sqrt(ab_prev) * beta_t / denom;
  double ct = std::sqrt(alpha_t) * (1.0 - ab_prev) / denom;
  PosteriorParams p;
  p.mean = Tensor(x0.c, x0.h, x0.w);
  for (std::size_t i = 0; i < p.mean.size(); ++i) p.mean.v[i] = c0 * x0.v[i] + ct * xt.v[i];
  p.variance = beta_t * (1.0 - ab_prev) / denom;
  return p;
}

Tensor predict_x0(const Tensor& xt, const Tensor& eps_pred, int t, const VarianceSchedule& s,
                  bool clamp_unit) {
  s.check_step(t);
  require_same_shape(xt, eps_pred, "predict_x0");
  double ab = s.alpha_bar_at(t);
  double inv_sa = 1.0 / std::sqrt(ab);
  double ce = std::sqrt(1.0 - ab);
  Tensor x0(xt.c, xt.h, xt.w);
  for (std::size_t i = 0; i < x0.size(); ++i) x0.v[i] = (xt.v[i] - ce * eps_pred.v[i]) * inv_sa;
  if (clamp_unit) x0.clamp(-1.0, 1.0);
  return x0;
}

Tensor reverse_step(const Tensor& xt, const Tensor& eps_pred, int t, const VarianceSchedule& s,
                    Rng& rng) {
  Tensor x0 = predict_x0(xt, eps_pred, t, s, true);
  PosteriorParams p = posterior_params(x0, xt, t, s);
  if (t == 1) return p.mean;
  double sd = std::sqrt(p.variance);
  Tensor out = p.mean;
  for (double& xi : out.v) xi += sd * rng.normal();
  return out;
}

}  // namespace robodiff
