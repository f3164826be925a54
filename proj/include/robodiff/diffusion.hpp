#pragma once

#include <cstdint>

#include "robodiff/rng.hpp"
#include "robodiff/schedule.hpp"
#include "robodiff/tensor.hpp"

namespace robodiff {

// A standard-normal sample shaped like the frame it will noise, together with
// the seed that produced it.
struct NoiseDraw {
  Tensor eps;
  std::uint64_t rng_seed = 0;
};

NoiseDraw draw_noise(int c, int h, int w, std::uint64_t seed);

// x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, the closed-form jump to
// step t of the forward chain.
Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps, const VarianceSchedule& s);
Tensor forward_sample(const Tensor& x0, int t, const NoiseDraw& eps, const VarianceSchedule& s);

// Step-by-step forward chain: x_k = sqrt(1-beta_k) x_{k-1} + sqrt(beta_k) eps_k
// for k = 1..t with a fresh draw each step. t = 0 returns x0 unchanged.
Tensor iterate_forward(const Tensor& x0, int t, const VarianceSchedule& s, Rng& rng);

struct PosteriorParams {
  Tensor mean;
  double variance = 0.0;
};

// Gaussian posterior q(x_{t-1} | x_t, x0) of the forward chain; tractable with
// abar_0 defined as 1 (so the t = 1 posterior has zero variance).
PosteriorParams posterior_params(const Tensor& x0, const Tensor& xt, int t,
                                 const VarianceSchedule& s);

// x0 estimate implied by a noise prediction: (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t).
Tensor predict_x0(const Tensor& xt, const Tensor& eps_pred, int t, const VarianceSchedule& s,
                  bool clamp_unit = true);

// One reverse transition: reconstruct x0 from the predicted noise (clamped to
// [-1,1]), then sample the forward posterior. Deterministic at t = 1.
Tensor reverse_step(const Tensor& xt, const Tensor& eps_pred, int t, const VarianceSchedule& s,
                    Rng& rng);

}  // namespace robodiff
