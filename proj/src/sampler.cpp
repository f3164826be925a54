#include "robodiff/sampler.hpp"

#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "robodiff/png_io.hpp"

namespace fs = std::filesystem;

namespace robodiff {

Tensor run_reverse_chain(int c, int h, int w, const EpsPredictor& predict,
                         const VarianceSchedule& s, Rng& rng, const ChainObserver& observer) {
  Tensor x(c, h, w);
  rng.fill_normal(x);
  for (int t = s.T; t >= 1; --t) {
    const Tensor eps = predict(x, t);
    if (observer) observer(t, predict_x0(x, eps, t, s, /*clamp_unit=*/true));
    x = reverse_step(x, eps, t, s, rng);
  }
  return x.clamp(-1.0, 1.0);
}

Tensor denoise_frame(const Tensor& cond_frame, const PoseDelta* dp, const Tensor* mask, double dk,
                     Backbone& net, const VarianceSchedule& s, Rng& rng) {
  const BlockConfig& cfg = net.config();
  if (cfg.use_pose != (dp != nullptr))
    throw std::invalid_argument(
        cfg.use_pose ? "denoise_frame: checkpoint variant needs a pose delta"
                     : "denoise_frame: pose delta supplied to a variant that does not use poses");
  if (cfg.use_mask != (mask != nullptr))
    throw std::invalid_argument(cfg.use_mask
                                    ? "denoise_frame: checkpoint variant needs a mask"
                                    : "denoise_frame: mask supplied to a variant that does not "
                                      "use masks");
  auto predict = [&](const Tensor& xt, int t) {
    return net.forward(cond_frame, xt, t, s.T, dk, dp, mask);
  };
  return run_reverse_chain(3, cond_frame.h, cond_frame.w, predict, s, rng);
}

void GenerationPlan::validate() const {
  if (n_frames < 0) throw std::invalid_argument("generation plan: negative frame count");
  if (static_cast<int>(pose_deltas.size()) != n_frames)
    throw std::invalid_argument("generation plan: need one pose delta per generated frame");
  if (!masks.empty() && static_cast<int>(masks.size()) != n_frames)
    throw std::invalid_argument("generation plan: need one mask per generated frame (or none)");
  if (n_frames > 0 && seed_frame.c != 3)
    throw std::invalid_argument("generation plan: seed frame must be RGB");
}

GenerationPlan plan_from_record(const DatasetRecord& rec, int start_index, int n_frames,
                                std::uint64_t rng_seed) {
  rec.validate();
  if (start_index < 0 || n_frames < 0 || start_index + n_frames > rec.n_frames() - 1)
    throw std::invalid_argument("plan_from_record: window [" + std::to_string(start_index) + ", " +
                                std::to_string(start_index + n_frames) +
                                "] exceeds the record length");
  GenerationPlan plan;
  plan.seed_frame = rec.frames[start_index];
  plan.n_frames = n_frames;
  plan.rng_seed = rng_seed;
  for (int i = 0; i < n_frames; ++i) {
    plan.pose_deltas.push_back(rec.pose_deltas[start_index + i]);
    plan.masks.push_back(rec.masks[start_index + 1 + i]);
  }
  return plan;
}

std::vector<Tensor> generate_video(const GenerationPlan& plan, Backbone& net,
                                   const VarianceSchedule& s) {
  Rng rng(plan.rng_seed);
  return generate_video(plan, net, s, rng);
}

std::vector<Tensor> generate_video(const GenerationPlan& plan, Backbone& net,
                                   const VarianceSchedule& s, Rng& rng) {
  plan.validate();
  const BlockConfig& cfg = net.config();
  if (cfg.use_mask && plan.masks.empty() && plan.n_frames > 0)
    throw std::invalid_argument("generate_video: checkpoint variant needs per-frame masks");

  std::vector<Tensor> out;
  out.reserve(plan.n_frames);
  const Tensor* cond = &plan.seed_frame;
  for (int i = 0; i < plan.n_frames; ++i) {
    const PoseDelta* dp = cfg.use_pose ? &plan.pose_deltas[i] : nullptr;
    const Tensor* mask = cfg.use_mask ? &plan.masks[i] : nullptr;
    Tensor frame = denoise_frame(*cond, dp, mask, /*dk=*/1.0, net, s, rng);
    if (!frame.all_finite())
      throw std::runtime_error("generate_video: non-finite values in generated frame " +
                               std::to_string(i));
    out.push_back(std::move(frame));
    cond = &out.back();
  }
  return out;
}

void export_generated(const std::vector<Tensor>& frames, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "frames_gen");
  char buf[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%05zu.png", i);
    write_png_rgb8((fs::path(dir) / "frames_gen" / buf).string(), tensor_to_frame(frames[i]));
  }
}

std::vector<Tensor> load_generated(const std::string& dir) {
  const fs::path sub = fs::path(dir) / "frames_gen";
  if (!fs::is_directory(sub)) throw std::runtime_error("missing frames_gen under " + dir);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(sub))
    if (e.path().extension() == ".png") ++n;
  std::vector<Tensor> out;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%05zu.png", i);
    const fs::path p = sub / buf;
    if (!fs::exists(p))
      throw std::runtime_error("generated frames not contiguous: missing " + p.string());
    out.push_back(frame_to_tensor(read_png_rgb8(p.string())));
  }
  return out;
}

}  // namespace robodiff
