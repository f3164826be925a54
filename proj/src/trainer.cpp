#include "robodiff/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "robodiff/checkpoint.hpp"

namespace fs = std::filesystem;

namespace robodiff {

Variant variant_from_string(const std::string& s) {
  if (s == "mask_pose") return Variant::mask_pose;
  if (s == "mask") return Variant::mask;
  if (s == "pose") return Variant::pose;
  if (s == "none") return Variant::none;
  throw std::invalid_argument("unknown variant: " + s +
                              " (expected mask_pose, mask, pose or none)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::mask_pose: return "mask_pose";
    case Variant::mask: return "mask";
    case Variant::pose: return "pose";
    case Variant::none: return "none";
  }
  return "?";
}

bool variant_uses_mask(Variant v) { return v == Variant::mask_pose || v == Variant::mask; }
bool variant_uses_pose(Variant v) { return v == Variant::mask_pose || v == Variant::pose; }

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("train config: steps must be >= 1");
  if (batch < 1) throw std::invalid_argument("train config: batch must be >= 1");
  if (!(lr >= 0)) throw std::invalid_argument("train config: lr must be >= 0");
  if (max_dk < 1) throw std::invalid_argument("train config: max_dk must be >= 1");
  if (T < 1) throw std::invalid_argument("train config: T must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("train config: checkpoint_every must be >= 1");
}

BlockConfig TrainConfig::block_config(int mask_classes) const {
  BlockConfig bc;
  bc.n_blocks = n_blocks;
  bc.width = width;
  bc.cond_width = cond_width;
  bc.mask_classes = variant_uses_mask(variant) ? mask_classes : 1;
  bc.use_mask = variant_uses_mask(variant);
  bc.use_pose = variant_uses_pose(variant);
  bc.freq_pairs = freq_pairs;
  bc.expansion = expansion;
  return bc;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv.entries()) {
    (void)value;
    static const char* known[] = {"steps",      "batch",     "lr",         "max_dk",
                                  "variant",    "T",         "beta_start", "beta_end",
                                  "seed",       "n_blocks",  "width",      "cond_width",
                                  "freq_pairs", "expansion", "checkpoint_every"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::runtime_error("train config: unknown key: " + key);
  }
  cfg.steps = kv.get_int("steps", cfg.steps);
  cfg.batch = kv.get_int("batch", cfg.batch);
  cfg.lr = kv.get_real("lr", cfg.lr);
  cfg.max_dk = kv.get_int("max_dk", cfg.max_dk);
  if (kv.has("variant")) cfg.variant = variant_from_string(kv.get_str("variant"));
  cfg.T = kv.get_int("T", cfg.T);
  cfg.beta_start = kv.get_real("beta_start", cfg.beta_start);
  cfg.beta_end = kv.get_real("beta_end", cfg.beta_end);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<int>(cfg.seed)));
  cfg.n_blocks = kv.get_int("n_blocks", cfg.n_blocks);
  cfg.width = kv.get_int("width", cfg.width);
  cfg.cond_width = kv.get_int("cond_width", cfg.cond_width);
  cfg.freq_pairs = kv.get_int("freq_pairs", cfg.freq_pairs);
  cfg.expansion = kv.get_int("expansion", cfg.expansion);
  cfg.checkpoint_every = kv.get_int("checkpoint_every", cfg.checkpoint_every);
  cfg.validate();
  return cfg;
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  auto real = [](double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  };
  kv.set("steps", std::to_string(steps));
  kv.set("batch", std::to_string(batch));
  kv.set("lr", real(lr));
  kv.set("max_dk", std::to_string(max_dk));
  kv.set("variant", to_string(variant));
  kv.set("T", std::to_string(T));
  kv.set("beta_start", real(beta_start));
  kv.set("beta_end", real(beta_end));
  kv.set("seed", std::to_string(seed));
  kv.set("n_blocks", std::to_string(n_blocks));
  kv.set("width", std::to_string(width));
  kv.set("cond_width", std::to_string(cond_width));
  kv.set("freq_pairs", std::to_string(freq_pairs));
  kv.set("expansion", std::to_string(expansion));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  return kv;
}

TrainItem sample_pair(const DatasetRecord& rec, int max_dk, Rng& rng) {
  const int n_frames = rec.n_frames();
  if (max_dk < 1) throw std::invalid_argument("sample_pair: max_dk must be >= 1");
  if (n_frames < max_dk + 1)
    throw std::invalid_argument("sample_pair: dataset has " + std::to_string(n_frames) +
                                " frames, needs at least max_dk + 1 = " +
                                std::to_string(max_dk + 1));

  // Uniform over all admissible (n, dk): enumerate dk-major and index in.
  int total = 0;
  for (int dk = 1; dk <= max_dk; ++dk) total += n_frames - dk;
  int r = rng.uniform_int(0, total - 1);
  int dk = 1;
  while (r >= n_frames - dk) {
    r -= n_frames - dk;
    ++dk;
  }
  const int n = r;

  TrainItem item;
  item.cond_frame = rec.frames[n];
  item.target_frame = rec.frames[n + dk];
  item.dk = dk;
  for (int i = n; i < n + dk; ++i) item.dp_sum += rec.pose_deltas[i];
  item.mask = rec.masks[n + dk];
  return item;
}

TrainState::TrainState(const BlockConfig& cfg) : net(cfg) {
  const ParamStore& store = net.params();
  m1.resize(store.size());
  m2.resize(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    m1[i].assign(store.at(i).count(), 0.0);
    m2[i].assign(store.at(i).count(), 0.0);
  }
}

double step_on_batch(TrainState& state, const std::vector<TrainItem>& batch,
                     const VarianceSchedule& s, const TrainConfig& cfg, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("step_on_batch: empty batch");
  const BlockConfig& bc = state.net.config();

  state.net.params().zero_grad();
  double loss = 0.0;
  for (const TrainItem& item : batch) {
    const int t = rng.uniform_int(1, s.T);
    Tensor eps(item.target_frame.c, item.target_frame.h, item.target_frame.w);
    rng.fill_normal(eps);
    const Tensor xt = forward_sample(item.target_frame, t, eps, s);
    const Tensor eps_pred =
        state.net.forward(item.cond_frame, xt, t, s.T, item.dk,
                          bc.use_pose ? &item.dp_sum : nullptr, bc.use_mask ? &item.mask : nullptr);

    // item loss = mean (eps_pred - eps)^2; batch loss averages over items
    const double scale = 1.0 / (static_cast<double>(eps.size()) * batch.size());
    Tensor grad(eps.c, eps.h, eps.w);
    double item_sum = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double r = eps_pred.v[i] - eps.v[i];
      item_sum += r * r;
      grad.v[i] = 2.0 * r * scale;
    }
    loss += item_sum * scale;
    state.net.backward(grad);
  }

  if (!std::isfinite(loss))
    throw std::runtime_error("training diverged: non-finite loss at step " +
                             std::to_string(state.step + 1) + " (try a lower lr)");

  // Adaptive-moment update with bias correction.
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  ParamStore& store = state.net.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store.at(i);
    std::vector<double>& m = state.m1[i];
    std::vector<double>& v = state.m2[i];
    for (std::size_t j = 0; j < p.count(); ++j) {
      const double g = p.grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      p.value[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.adam_eps);
    }
  }
  state.last_loss = loss;
  return loss;
}

double train_step(TrainState& state, const DatasetRecord& rec, const VarianceSchedule& s,
                  const TrainConfig& cfg, Rng& rng) {
  std::vector<TrainItem> batch;
  batch.reserve(cfg.batch);
  for (int i = 0; i < cfg.batch; ++i) batch.push_back(sample_pair(rec, cfg.max_dk, rng));
  return step_on_batch(state, batch, s, cfg, rng);
}

TrainResult train_loop(const DatasetRecord& rec, const TrainConfig& cfg,
                       const std::string& out_dir) {
  cfg.validate();
  rec.validate();
  fs::create_directories(out_dir);

  const VarianceSchedule s = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
  TrainState state(cfg.block_config(rec.mask_classes));
  state.net.init_weights(cfg.seed);
  Rng rng(cfg.seed + 1);

  const CheckpointMeta meta{state.net.config(), cfg.T, cfg.beta_start, cfg.beta_end};
  const std::string loss_path = (fs::path(out_dir) / "loss.csv").string();
  std::ofstream loss_csv(loss_path);
  if (!loss_csv) throw std::runtime_error("cannot write " + loss_path);
  loss_csv << "step,loss\n";

  char buf[64];
  for (int step = 1; step <= cfg.steps; ++step) {
    const double loss = train_step(state, rec, s, cfg, rng);
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", step, loss);
    loss_csv << buf;
    if (step % cfg.checkpoint_every == 0 && step != cfg.steps) {
      std::snprintf(buf, sizeof buf, "checkpoint_%06d.ckpt", step);
      save_checkpoint((fs::path(out_dir) / buf).string(), state.net, meta);
    }
  }
  loss_csv.close();

  TrainResult res;
  res.checkpoint_path = (fs::path(out_dir) / "checkpoint.ckpt").string();
  res.loss_csv_path = loss_path;
  res.final_loss = state.last_loss;
  save_checkpoint(res.checkpoint_path, state.net, meta);
  return res;
}

}  // namespace robodiff
