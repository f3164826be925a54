#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robodiff/backbone.hpp"
#include "robodiff/config.hpp"
#include "robodiff/dataset.hpp"
#include "robodiff/diffusion.hpp"

namespace robodiff {

// Conditioning variants: which side information the network sees.
enum class Variant { mask_pose, mask, pose, none };
Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);
bool variant_uses_mask(Variant v);
bool variant_uses_pose(Variant v);

struct TrainConfig {
  int steps = 2000;
  int batch = 4;
  double lr = 2e-4;
  int max_dk = 3;
  Variant variant = Variant::mask_pose;
  int T = 200;
  double beta_start = 5e-4;
  double beta_end = 0.1;
  std::uint64_t seed = 1;

  int n_blocks = 8;
  int width = 64;
  int cond_width = 64;
  int freq_pairs = 8;
  int expansion = 2;

  int checkpoint_every = 500;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

  void validate() const;
  BlockConfig block_config(int mask_classes) const;

  // `key = value` config file support; unknown keys are rejected.
  static TrainConfig from_key_values(const KeyValues& kv);
  KeyValues to_key_values() const;
};

// One training pair: condition frame n, target frame n+dk, the summed pose
// delta across the gap and the target frame's mask.
struct TrainItem {
  Tensor cond_frame;
  Tensor target_frame;
  int dk = 1;
  PoseDelta dp_sum;
  Tensor mask;
};

// Uniform over the joint set of admissible (n, dk) pairs, dk in [1, max_dk].
TrainItem sample_pair(const DatasetRecord& rec, int max_dk, Rng& rng);

// Weights plus optimizer state. Non-copyable (the network layers point into
// the parameter store).
struct TrainState {
  explicit TrainState(const BlockConfig& cfg);
  Backbone net;
  std::vector<std::vector<double>> m1, m2;  // adaptive-moment accumulators
  long long step = 0;
  double last_loss = 0.0;
};

// One optimization step on an explicit batch: per item draw t and eps, noise
// the target, regress the predicted noise, then apply one adaptive-moment
// update. Returns the batch loss (mean squared error per element). Throws on
// a non-finite loss.
double step_on_batch(TrainState& state, const std::vector<TrainItem>& batch,
                     const VarianceSchedule& s, const TrainConfig& cfg, Rng& rng);

// Draws cfg.batch pairs and runs step_on_batch.
double train_step(TrainState& state, const DatasetRecord& rec, const VarianceSchedule& s,
                  const TrainConfig& cfg, Rng& rng);

struct TrainResult {
  std::string checkpoint_path;
  std::string loss_csv_path;
  double final_loss = 0.0;
};

// Full run: cfg.steps steps, `step,loss` CSV, a checkpoint every
// cfg.checkpoint_every steps and a final one. Everything below is a pure
// function of (cfg, rec): weights start from init_weights(cfg.seed) and the
// training stream is seeded with cfg.seed + 1.
TrainResult train_loop(const DatasetRecord& rec, const TrainConfig& cfg,
                       const std::string& out_dir);

}  // namespace robodiff
