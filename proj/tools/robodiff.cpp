// Command-line front end: data generation, training, sampling, evaluation and
// the multi-variant comparison experiment. Every command resolves its flags
// into a manifest first (written atomically into --out), then produces its
// results; `rerun` replays any manifest into a fresh directory.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robodiff/checkpoint.hpp"
#include "robodiff/config.hpp"
#include "robodiff/dataset.hpp"
#include "robodiff/manifest.hpp"
#include "robodiff/metrics.hpp"
#include "robodiff/sampler.hpp"
#include "robodiff/trainer.hpp"

namespace fs = std::filesystem;
using namespace robodiff;

namespace {

// Exit codes: 0 success, 2 usage error, 3 runtime failure.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ArgMap = std::map<std::string, std::string>;

std::string map_str(const ArgMap& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw std::runtime_error("argument snapshot is missing key: " + key);
  return it->second;
}

int map_int(const ArgMap& m, const std::string& key) {
  const std::string v = map_str(m, key);
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("flag " + key + ": not an integer: " + v);
  }
}

double map_real(const ArgMap& m, const std::string& key) {
  const std::string v = map_str(m, key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("flag " + key + ": not a number: " + v);
  }
}

std::string fmt_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_manifest(const std::string& command, ArgMap args, const std::string& out_dir,
                    const std::string& checkpoint_hash = "",
                    nlohmann::json conditions = nlohmann::json()) {
  args["out"] = "<out>";
  RunManifest m;
  m.command = command;
  m.args = std::move(args);
  m.checkpoint_hash = checkpoint_hash;
  m.conditions = std::move(conditions);
  fs::create_directories(out_dir);
  m.write_atomic((fs::path(out_dir) / "manifest.json").string());
}

DatasetRecord load_dataset_or_hint(const std::string& dir) {
  try {
    return load_dataset(dir);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) +
                             "\nhint: generate a dataset first with `robodiff gen-data --out " +
                             dir + " ...`");
  }
}

// ---------------------------------------------------------------------------
// gen-data

void run_gen_data(const ArgMap& args) {
  const std::string out = map_str(args, "out");
  const int frames = map_int(args, "frames");
  if (frames < 1) throw UsageError("--frames must be >= 1");

  const std::string size = map_str(args, "size");
  const auto x = size.find('x');
  if (x == std::string::npos || x == 0 || x + 1 == size.size())
    throw UsageError("--size must look like 64x36");
  ArgMap size_kv{{"w", size.substr(0, x)}, {"h", size.substr(x + 1)}};
  const int W = map_int(size_kv, "w"), H = map_int(size_kv, "h");
  if (W < 16 || H < 16) throw UsageError("--size: canvas must be at least 16x16");

  TrajectoryKind kind;
  try {
    kind = trajectory_kind_from_string(map_str(args, "trajectory"));
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const std::string masks = map_str(args, "masks");
  int mask_classes;
  if (masks == "robot") mask_classes = 1;
  else if (masks == "robot+bg") mask_classes = 2;
  else throw UsageError("--masks must be robot or robot+bg");
  const std::string bg = map_str(args, "background");
  int bg_style;
  if (bg == "room") bg_style = 0;
  else if (bg == "plain") bg_style = 1;
  else throw UsageError("--background must be room or plain");

  const auto seed = static_cast<std::uint64_t>(map_int(args, "seed"));
  const double speed = map_real(args, "speed");
  const double turn_rate = map_real(args, "turn_rate");
  const double ppm = map_real(args, "ppm");
  const double fps = map_real(args, "fps");

  Rng rng(seed);
  std::vector<PoseDelta> traj;
  if (frames >= 2) traj = gen_trajectory(kind, frames, speed, turn_rate, rng);
  const SceneSpec spec = fit_scene(W, H, bg_style, ppm, std::move(traj));
  const DatasetRecord rec = make_dataset(spec, mask_classes, fps);

  write_manifest("gen-data", args, out);
  export_dataset(rec, out);
  std::printf("wrote %d frames to %s\n", rec.n_frames(), out.c_str());
}

// ---------------------------------------------------------------------------
// train

TrainConfig config_from_args(const ArgMap& args) {
  KeyValues kv;
  for (const auto& [k, v] : args)
    if (k != "out" && k != "data" && k != "variants" && k != "gen_frames" && k != "start")
      kv.set(k, v);
  return TrainConfig::from_key_values(kv);
}

void run_train(const ArgMap& args) {
  const std::string out = map_str(args, "out");
  const TrainConfig cfg = config_from_args(args);
  const DatasetRecord rec = load_dataset_or_hint(map_str(args, "data"));
  write_manifest("train", args, out);
  const TrainResult res = train_loop(rec, cfg, out);
  std::printf("trained %d steps, final loss %.6g\ncheckpoint: %s\nloss curve: %s\n", cfg.steps,
              res.final_loss, res.checkpoint_path.c_str(), res.loss_csv_path.c_str());
}

// ---------------------------------------------------------------------------
// sample

nlohmann::json conditions_json(const GenerationPlan& plan) {
  nlohmann::json conds = nlohmann::json::array();
  for (const PoseDelta& d : plan.pose_deltas) {
    const auto a = d.to_array();
    conds.push_back(std::vector<double>(a.begin(), a.end()));
  }
  return nlohmann::json{{"dk", 1},
                        {"mask_source", "dataset_ground_truth"},
                        {"pose_deltas", std::move(conds)}};
}

void run_sample(const ArgMap& args) {
  const std::string out = map_str(args, "out");
  const std::string ck_path = map_str(args, "checkpoint");
  if (!fs::exists(ck_path))
    throw std::runtime_error("checkpoint not found: " + ck_path +
                             "\nhint: train one first with `robodiff train`");
  LoadedCheckpoint ck = load_checkpoint(ck_path);
  const DatasetRecord rec = load_dataset_or_hint(map_str(args, "data"));
  if (ck.meta.cfg.use_mask && ck.meta.cfg.mask_classes != rec.mask_classes)
    throw std::runtime_error(
        "checkpoint expects " + std::to_string(ck.meta.cfg.mask_classes) +
        "-class masks but the dataset has " + std::to_string(rec.mask_classes) +
        "\nhint: regenerate the data with the matching --masks choice, or retrain");

  const int n_frames = map_int(args, "frames");
  const int start = map_int(args, "start");
  if (n_frames < 0) throw UsageError("--frames must be >= 0");
  const auto seed = static_cast<std::uint64_t>(map_int(args, "seed"));

  const GenerationPlan plan = plan_from_record(rec, start, n_frames, seed);
  write_manifest("sample", args, out, file_fnv1a64(ck_path), conditions_json(plan));

  const VarianceSchedule s = make_schedule(ck.meta.T, ck.meta.beta_start, ck.meta.beta_end);
  const std::vector<Tensor> frames = generate_video(plan, *ck.net, s);
  export_generated(frames, out);
  std::printf("generated %zu frames under %s\n", frames.size(), out.c_str());
}

// ---------------------------------------------------------------------------
// eval

void run_eval(const ArgMap& args) {
  const std::string out = map_str(args, "out");
  const DatasetRecord rec = load_dataset_or_hint(map_str(args, "data"));
  const std::string gen_dir = map_str(args, "gen");

  std::vector<Tensor> gen_frames;
  int offset;
  const std::string offset_arg = map_str(args, "offset");
  if (fs::is_directory(fs::path(gen_dir) / "frames_gen")) {
    gen_frames = load_generated(gen_dir);
    if (offset_arg == "auto") {
      const fs::path mpath = fs::path(gen_dir) / "manifest.json";
      if (!fs::exists(mpath))
        throw std::runtime_error(gen_dir +
                                 " has no manifest.json to infer the frame offset from"
                                 "\nhint: pass --offset explicitly");
      const RunManifest m = RunManifest::load(mpath.string());
      offset = map_int(m.args, "start") + 1;
    } else {
      offset = map_int(args, "offset");
    }
  } else if (fs::is_directory(fs::path(gen_dir) / "frames")) {
    gen_frames = load_dataset_or_hint(gen_dir).frames;
    offset = offset_arg == "auto" ? 0 : map_int(args, "offset");
  } else {
    throw std::runtime_error("--gen " + gen_dir +
                             " contains neither frames_gen/ nor frames/"
                             "\nhint: point it at a sample output or a dataset directory");
  }

  write_manifest("eval", args, out);
  const MetricsReport rep = evaluate_sequence(rec, gen_frames, offset);
  write_report_csv(rep, (fs::path(out) / "report.csv").string());

  if (map_str(args, "log_hu") == "1") {
    for (std::size_t i = 0; i < gen_frames.size(); ++i) {
      if (!rep.rows[i].hu_valid) {
        std::printf("frame %zu: empty generated mask\n", i);
        continue;
      }
      const Tensor mg = mask_from_background_subtraction(gen_frames[i], rec.background);
      const HuVector lo = hu_log_scaled(hu_moments(rec.masks[offset + i]));
      const HuVector lg = hu_log_scaled(hu_moments(mg));
      std::printf("frame %zu log-hu orig:", i);
      for (double h : lo.h) std::printf(" %.4f", h);
      std::printf("\nframe %zu log-hu gen: ", i);
      for (double h : lg.h) std::printf(" %.4f", h);
      std::printf("\n");
    }
  }
  std::printf("frames=%zu ssim_mean=%.9g hu_mean=%.9g iou_mean=%.9g empty_gen_masks=%d\n",
              rep.rows.size(), rep.ssim_mean, rep.hu_mean, rep.iou_mean, rep.empty_gen_masks);
  std::printf("report: %s\n", (fs::path(out) / "report.csv").string().c_str());
}

// ---------------------------------------------------------------------------
// compare

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void run_compare(const ArgMap& args) {
  const std::string out = map_str(args, "out");
  const DatasetRecord rec = load_dataset_or_hint(map_str(args, "data"));
  const std::vector<std::string> variant_names = split_csv_list(map_str(args, "variants"));
  if (variant_names.empty()) throw UsageError("--variants: need at least one variant");
  std::vector<Variant> variants;
  for (const std::string& name : variant_names) {
    try {
      variants.push_back(variant_from_string(name));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  const int gen_frames_n = map_int(args, "gen_frames");
  const int start = map_int(args, "start");
  TrainConfig base_cfg = config_from_args(args);

  write_manifest("compare", args, out);

  struct Row {
    std::string variant;
    MetricsReport rep;
  };
  std::vector<Row> rows;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const std::string& name = variant_names[vi];
    const Variant v = variants[vi];
    const std::string sub = (fs::path(out) / name).string();
    std::printf("[compare] training variant %s ...\n", name.c_str());
    std::fflush(stdout);

    TrainConfig cfg = base_cfg;
    cfg.variant = v;
    const TrainResult res = train_loop(rec, cfg, sub);

    // Sample from the saved checkpoint (shared generation seed across variants).
    LoadedCheckpoint ck = load_checkpoint(res.checkpoint_path);
    const VarianceSchedule s = make_schedule(ck.meta.T, ck.meta.beta_start, ck.meta.beta_end);
    const GenerationPlan plan = plan_from_record(rec, start, gen_frames_n, cfg.seed + 10007);
    const std::vector<Tensor> gen = generate_video(plan, *ck.net, s);
    export_generated(gen, sub);

    MetricsReport rep = evaluate_sequence(rec, gen, start + 1);
    write_report_csv(rep, (fs::path(sub) / "report.csv").string());
    std::printf("[compare] %s: ssim=%.4f hu=%.6g iou=%.4f\n", name.c_str(), rep.ssim_mean,
                rep.hu_mean, rep.iou_mean);
    std::fflush(stdout);
    rows.push_back({name, std::move(rep)});
  }

  // Merged table plus best-first rankings per metric.
  const std::string merged = (fs::path(out) / "comparison.csv").string();
  std::ofstream csv(merged);
  if (!csv) throw std::runtime_error("cannot write " + merged);
  csv << "variant,ssim_mean,hu_mean,iou_mean,ssim_std,hu_std,iou_std,empty_gen_masks\n";
  char buf[256];
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", r.variant.c_str(),
                  r.rep.ssim_mean, r.rep.hu_mean, r.rep.iou_mean, r.rep.ssim_std, r.rep.hu_std,
                  r.rep.iou_std, r.rep.empty_gen_masks);
    csv << buf;
  }
  auto write_rank = [&](const char* label, auto key, bool higher_better) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return higher_better ? key(rows[a].rep) > key(rows[b].rep) : key(rows[a].rep) < key(rows[b].rep);
    });
    csv << label;
    for (std::size_t i : order) csv << ';' << rows[i].variant;
    csv << '\n';
  };
  write_rank("rank_ssim", [](const MetricsReport& r) { return r.ssim_mean; }, true);
  write_rank("rank_hu", [](const MetricsReport& r) { return r.hu_mean; }, false);
  write_rank("rank_iou", [](const MetricsReport& r) { return r.iou_mean; }, true);
  if (!csv) throw std::runtime_error("write failed for " + merged);
  std::printf("comparison table: %s\n", merged.c_str());
}

// ---------------------------------------------------------------------------
// rerun

int dispatch(const std::string& command, const ArgMap& args);

void run_rerun(const ArgMap& args) {
  const std::string out = map_str(args, "out");
  const RunManifest m = RunManifest::load(map_str(args, "manifest"));
  ArgMap replay = m.args;
  replay["out"] = out;
  std::printf("replaying `%s` into %s\n", m.command.c_str(), out.c_str());
  const int rc = dispatch(m.command, replay);
  if (rc != 0) throw std::runtime_error("replayed command failed");
}

int dispatch(const std::string& command, const ArgMap& args) {
  if (command == "gen-data") run_gen_data(args);
  else if (command == "train") run_train(args);
  else if (command == "sample") run_sample(args);
  else if (command == "eval") run_eval(args);
  else if (command == "compare") run_compare(args);
  else throw std::runtime_error("manifest names an unknown command: " + command);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditioned video-diffusion toolkit: synthetic robot scenes, training, "
               "autoregressive sampling, and shape/location metrics"};
  app.require_subcommand(1);

  // gen-data ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic robot video dataset");
  std::string g_out, g_size = "64x36", g_traj = "arc", g_masks = "robot", g_bg = "room";
  int g_frames = 21, g_seed = 1;
  double g_speed = 0.5, g_turn = 0.251, g_ppm = 4.0, g_fps = 1.0;
  gen->add_option("--out", g_out, "output dataset directory")->required();
  gen->add_option("--frames", g_frames, "number of frames");
  gen->add_option("--size", g_size, "canvas WxH in pixels");
  gen->add_option("--trajectory", g_traj, "line, arc or piecewise");
  gen->add_option("--seed", g_seed, "rng seed");
  gen->add_option("--masks", g_masks, "robot or robot+bg");
  gen->add_option("--speed", g_speed, "metres per frame");
  gen->add_option("--turn-rate", g_turn, "radians per frame (arc)");
  gen->add_option("--ppm", g_ppm, "pixels per metre");
  gen->add_option("--fps", g_fps, "frames per second metadata");
  gen->add_option("--background", g_bg, "room or plain");

  // train -------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a denoising network on a dataset");
  std::string t_data, t_out, t_config, t_variant;
  int t_steps = -1, t_batch = -1, t_maxdk = -1, t_T = -1, t_seed = -1;
  int t_blocks = -1, t_width = -1, t_cond = -1, t_freq = -1, t_exp = -1, t_every = -1;
  double t_lr = -1, t_bs = -1, t_be = -1;
  tr->add_option("--data", t_data, "dataset directory")->required();
  tr->add_option("--out", t_out, "output directory")->required();
  tr->add_option("--config", t_config, "key = value config file (flags override)");
  tr->add_option("--variant", t_variant, "mask_pose, mask, pose or none");
  tr->add_option("--steps", t_steps, "optimization steps");
  tr->add_option("--batch", t_batch, "pairs per step");
  tr->add_option("--lr", t_lr, "learning rate");
  tr->add_option("--max-dk", t_maxdk, "largest frame gap");
  tr->add_option("--T", t_T, "diffusion steps");
  tr->add_option("--beta-start", t_bs, "schedule start");
  tr->add_option("--beta-end", t_be, "schedule end");
  tr->add_option("--seed", t_seed, "rng seed");
  tr->add_option("--blocks", t_blocks, "backbone blocks");
  tr->add_option("--width", t_width, "backbone channels");
  tr->add_option("--cond-width", t_cond, "conditioning vector width");
  tr->add_option("--freq-pairs", t_freq, "sinusoidal (sin,cos) pairs");
  tr->add_option("--expansion", t_exp, "pointwise expansion factor");
  tr->add_option("--checkpoint-every", t_every, "intermediate checkpoint period");

  auto train_args = [&]() {
    KeyValues kv;
    if (!t_config.empty()) kv = KeyValues::parse_file(t_config);
    if (tr->count("--variant")) kv.set("variant", t_variant);
    if (tr->count("--steps")) kv.set("steps", std::to_string(t_steps));
    if (tr->count("--batch")) kv.set("batch", std::to_string(t_batch));
    if (tr->count("--lr")) kv.set("lr", fmt_real(t_lr));
    if (tr->count("--max-dk")) kv.set("max_dk", std::to_string(t_maxdk));
    if (tr->count("--T")) kv.set("T", std::to_string(t_T));
    if (tr->count("--beta-start")) kv.set("beta_start", fmt_real(t_bs));
    if (tr->count("--beta-end")) kv.set("beta_end", fmt_real(t_be));
    if (tr->count("--seed")) kv.set("seed", std::to_string(t_seed));
    if (tr->count("--blocks")) kv.set("n_blocks", std::to_string(t_blocks));
    if (tr->count("--width")) kv.set("width", std::to_string(t_width));
    if (tr->count("--cond-width")) kv.set("cond_width", std::to_string(t_cond));
    if (tr->count("--freq-pairs")) kv.set("freq_pairs", std::to_string(t_freq));
    if (tr->count("--expansion")) kv.set("expansion", std::to_string(t_exp));
    if (tr->count("--checkpoint-every")) kv.set("checkpoint_every", std::to_string(t_every));
    // resolve against defaults so the manifest snapshots the full config
    ArgMap out;
    try {
      for (const auto& [k, v] : TrainConfig::from_key_values(kv).to_key_values().entries())
        out[k] = v;
    } catch (const std::exception& e) {
      if (t_config.empty()) throw UsageError(e.what());  // it can only be a flag problem
      throw;
    }
    return out;
  };

  // sample ------------------------------------------------------------------
  auto* sm = app.add_subcommand("sample", "generate frames autoregressively from one seed frame");
  std::string s_ck, s_data, s_out;
  int s_frames = 10, s_start = 0, s_seed = 1;
  sm->add_option("--checkpoint", s_ck, "trained checkpoint file")->required();
  sm->add_option("--data", s_data, "dataset supplying the seed frame and conditions")->required();
  sm->add_option("--out", s_out, "output directory")->required();
  sm->add_option("--frames", s_frames, "frames to generate");
  sm->add_option("--start", s_start, "seed frame index in the dataset");
  sm->add_option("--seed", s_seed, "rng seed");

  // eval --------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "score generated frames against ground truth");
  std::string e_data, e_gen, e_out, e_offset = "auto";
  bool e_loghu = false;
  ev->add_option("--data", e_data, "ground-truth dataset directory")->required();
  ev->add_option("--gen", e_gen, "sample output (frames_gen/) or dataset directory")->required();
  ev->add_option("--out", e_out, "output directory")->required();
  ev->add_option("--offset", e_offset, "index of the orig frame matching gen frame 0, or auto");
  ev->add_flag("--log-hu", e_loghu, "print log-scaled Hu vectors (diagnostic only)");

  // compare -----------------------------------------------------------------
  auto* cp = app.add_subcommand("compare", "train and score several conditioning variants");
  std::string c_data, c_out, c_variants = "mask_pose,mask,pose,none", c_config;
  int c_genframes = 10, c_start = 0;
  cp->add_option("--data", c_data, "dataset directory")->required();
  cp->add_option("--out", c_out, "output directory")->required();
  cp->add_option("--variants", c_variants, "comma-separated variant list");
  cp->add_option("--gen-frames", c_genframes, "frames to generate per variant");
  cp->add_option("--start", c_start, "seed frame index");
  cp->add_option("--config", c_config, "key = value config file (flags override)");
  int c_steps = -1, c_batch = -1, c_maxdk = -1, c_T = -1, c_seed = -1;
  int c_blocks = -1, c_width = -1, c_cond = -1, c_freq = -1, c_exp = -1, c_every = -1;
  double c_lr = -1, c_bs = -1, c_be = -1;
  cp->add_option("--steps", c_steps, "optimization steps");
  cp->add_option("--batch", c_batch, "pairs per step");
  cp->add_option("--lr", c_lr, "learning rate");
  cp->add_option("--max-dk", c_maxdk, "largest frame gap");
  cp->add_option("--T", c_T, "diffusion steps");
  cp->add_option("--beta-start", c_bs, "schedule start");
  cp->add_option("--beta-end", c_be, "schedule end");
  cp->add_option("--seed", c_seed, "rng seed");
  cp->add_option("--blocks", c_blocks, "backbone blocks");
  cp->add_option("--width", c_width, "backbone channels");
  cp->add_option("--cond-width", c_cond, "conditioning vector width");
  cp->add_option("--freq-pairs", c_freq, "sinusoidal (sin,cos) pairs");
  cp->add_option("--expansion", c_exp, "pointwise expansion factor");
  cp->add_option("--checkpoint-every", c_every, "intermediate checkpoint period");

  auto compare_args = [&]() {
    KeyValues kv;
    if (!c_config.empty()) kv = KeyValues::parse_file(c_config);
    if (cp->count("--steps")) kv.set("steps", std::to_string(c_steps));
    if (cp->count("--batch")) kv.set("batch", std::to_string(c_batch));
    if (cp->count("--lr")) kv.set("lr", fmt_real(c_lr));
    if (cp->count("--max-dk")) kv.set("max_dk", std::to_string(c_maxdk));
    if (cp->count("--T")) kv.set("T", std::to_string(c_T));
    if (cp->count("--beta-start")) kv.set("beta_start", fmt_real(c_bs));
    if (cp->count("--beta-end")) kv.set("beta_end", fmt_real(c_be));
    if (cp->count("--seed")) kv.set("seed", std::to_string(c_seed));
    if (cp->count("--blocks")) kv.set("n_blocks", std::to_string(c_blocks));
    if (cp->count("--width")) kv.set("width", std::to_string(c_width));
    if (cp->count("--cond-width")) kv.set("cond_width", std::to_string(c_cond));
    if (cp->count("--freq-pairs")) kv.set("freq_pairs", std::to_string(c_freq));
    if (cp->count("--expansion")) kv.set("expansion", std::to_string(c_exp));
    if (cp->count("--checkpoint-every")) kv.set("checkpoint_every", std::to_string(c_every));
    ArgMap out;
    try {
      for (const auto& [k, v] : TrainConfig::from_key_values(kv).to_key_values().entries())
        out[k] = v;
    } catch (const std::exception& e) {
      if (c_config.empty()) throw UsageError(e.what());
      throw;
    }
    return out;
  };

  // rerun -------------------------------------------------------------------
  auto* rr = app.add_subcommand("rerun", "replay a recorded run into a new directory");
  std::string r_manifest, r_out;
  rr->add_option("--manifest", r_manifest, "manifest.json of a previous run")->required();
  rr->add_option("--out", r_out, "new output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // help/version exit 0, every flag problem exits 2
  }

  try {
    if (gen->parsed()) {
      ArgMap args{{"out", g_out},
                  {"frames", std::to_string(g_frames)},
                  {"size", g_size},
                  {"trajectory", g_traj},
                  {"seed", std::to_string(g_seed)},
                  {"masks", g_masks},
                  {"speed", fmt_real(g_speed)},
                  {"turn_rate", fmt_real(g_turn)},
                  {"ppm", fmt_real(g_ppm)},
                  {"fps", fmt_real(g_fps)},
                  {"background", g_bg}};
      run_gen_data(args);
    } else if (tr->parsed()) {
      ArgMap args = train_args();
      args["data"] = t_data;
      args["out"] = t_out;
      run_train(args);
    } else if (sm->parsed()) {
      ArgMap args{{"checkpoint", s_ck},       {"data", s_data},
                  {"out", s_out},             {"frames", std::to_string(s_frames)},
                  {"start", std::to_string(s_start)}, {"seed", std::to_string(s_seed)}};
      run_sample(args);
    } else if (ev->parsed()) {
      ArgMap args{{"data", e_data},     {"gen", e_gen},
                  {"out", e_out},       {"offset", e_offset},
                  {"log_hu", e_loghu ? "1" : "0"}};
      run_eval(args);
    } else if (cp->parsed()) {
      ArgMap args = compare_args();
      args["data"] = c_data;
      args["out"] = c_out;
      args["variants"] = c_variants;
      args["gen_frames"] = std::to_string(c_genframes);
      args["start"] = std::to_string(c_start);
      run_compare(args);
    } else if (rr->parsed()) {
      run_rerun({{"manifest", r_manifest}, {"out", r_out}});
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
