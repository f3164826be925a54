#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "robodiff/backbone.hpp"
#include "robodiff/dataset.hpp"
#include "robodiff/diffusion.hpp"

namespace robodiff {

// Noise estimate for the current chain state; usually wraps a Backbone, but
// tests may substitute any callable.
using EpsPredictor = std::function<Tensor(const Tensor& xt, int t)>;
// Called once per step with the x0 estimate the chain is about to use.
using ChainObserver = std::function<void(int t, const Tensor& x0_hat)>;

// Full reverse chain: draws x_T ~ N(0, I) of shape (c, h, w) from rng, steps
// t = T..1 through reverse_step, returns the final estimate clamped to
// [-1,1].
Tensor run_reverse_chain(int c, int h, int w, const EpsPredictor& predict,
                         const VarianceSchedule& s, Rng& rng,
                         const ChainObserver& observer = nullptr);

// One conditioned frame. dp/mask must match the checkpoint variant exactly:
// a missing required condition and a supplied unused one are both errors.
Tensor denoise_frame(const Tensor& cond_frame, const PoseDelta* dp, const Tensor* mask, double dk,
                     Backbone& net, const VarianceSchedule& s, Rng& rng);

// Autoregressive generation from one seed frame. Generated frame i is
// conditioned on generated frame i-1 (the seed for i = 0) with dk = 1, using
// the i-th pose delta / mask below.
struct GenerationPlan {
  Tensor seed_frame;
  std::vector<PoseDelta> pose_deltas;  // one per generated frame
  std::vector<Tensor> masks;           // empty, or one per generated frame
  int n_frames = 0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Conditions taken from a dataset record: the seed is frame start_index and
// generated frame i corresponds to record frame start_index + 1 + i.
GenerationPlan plan_from_record(const DatasetRecord& rec, int start_index, int n_frames,
                                std::uint64_t rng_seed);

std::vector<Tensor> generate_video(const GenerationPlan& plan, Backbone& net,
                                   const VarianceSchedule& s);
// Same, but on a caller-owned rng stream (the plan's seed is ignored), so a
// video can be generated in instalments.
std::vector<Tensor> generate_video(const GenerationPlan& plan, Backbone& net,
                                   const VarianceSchedule& s, Rng& rng);

// frames_gen/%05d.png under dir.
void export_generated(const std::vector<Tensor>& frames, const std::string& dir);
std::vector<Tensor> load_generated(const std::string& dir);

}  // namespace robodiff
