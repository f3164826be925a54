#include "robodiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "robodiff/config.hpp"
#include "robodiff/png_io.hpp"

namespace fs = std::filesystem;

namespace robodiff {

namespace {
// Background colors on the [0,1] scale. Every robot color keeps a mean
// absolute channel difference of at least 0.2 from every one of these, twice
// the background-subtraction threshold used at evaluation time.
constexpr std::array<double, 3> kWall{0.85, 0.87, 0.90};
constexpr std::array<double, 3> kFloor{0.55, 0.52, 0.50};
constexpr std::array<double, 3> kDoor{0.45, 0.30, 0.20};

void put_rgb(Tensor& t, int y, int x, const std::array<double, 3>& c01) {
  for (int c = 0; c < 3; ++c) t.at(c, y, x) = c01[c] * 2.0 - 1.0;
}

struct RobotFramePoint {
  double u, v;
};
RobotFramePoint to_robot_frame(const Pose& p, double wx, double wy) {
  const double dx = wx - p.x, dy = wy - p.y;
  const double c = std::cos(p.psi), s = std::sin(p.psi);
  return {c * dx + s * dy, -s * dx + c * dy};
}

bool in_body(const RobotSprite& sp, const RobotFramePoint& q) {
  return std::abs(q.u) <= sp.body_w / 2 && std::abs(q.v) <= sp.body_h / 2;
}
bool in_arm(const RobotSprite& sp, const RobotFramePoint& q) {
  return q.u >= sp.body_w / 2 && q.u <= sp.body_w / 2 + sp.arm_len && std::abs(q.v) <= sp.arm_th / 2;
}

// Body and arm corners in the robot frame, for footprint/bounds checks.
std::array<RobotFramePoint, 8> sprite_corners(const RobotSprite& sp) {
  const double bu = sp.body_w / 2, bv = sp.body_h / 2;
  const double au = sp.body_w / 2 + sp.arm_len, av = sp.arm_th / 2;
  return {{{-bu, -bv}, {bu, -bv}, {-bu, bv}, {bu, bv}, {bu, -av}, {au, -av}, {bu, av}, {au, av}}};
}

std::string five_digit(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", i);
  return buf;
}
}  // namespace

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "line") return TrajectoryKind::line;
  if (s == "arc") return TrajectoryKind::arc;
  if (s == "piecewise") return TrajectoryKind::piecewise;
  throw std::invalid_argument("unknown trajectory kind: " + s +
                              " (expected line, arc or piecewise)");
}

std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::line: return "line";
    case TrajectoryKind::arc: return "arc";
    case TrajectoryKind::piecewise: return "piecewise";
  }
  return "?";
}

Pose pose_at(const SceneSpec& spec, int frame_index) {
  if (frame_index < 0 || frame_index >= spec.n_frames())
    throw std::out_of_range("pose_at: frame index out of range");
  Pose p{spec.start_x, spec.start_y, spec.start_psi};
  for (int i = 0; i < frame_index; ++i) {
    p.x += spec.trajectory[i].dx;
    p.y += spec.trajectory[i].dy;
    p.psi += spec.trajectory[i].dpsi;
  }
  return p;
}

std::vector<PoseDelta> gen_trajectory(TrajectoryKind kind, int n_frames, double speed,
                                      double turn_rate, Rng& rng) {
  if (n_frames < 2) throw std::invalid_argument("gen_trajectory: need at least 2 frames");
  std::vector<PoseDelta> deltas;
  deltas.reserve(n_frames - 1);
  switch (kind) {
    case TrajectoryKind::line:
      for (int i = 0; i < n_frames - 1; ++i) deltas.push_back({speed, 0, 0, 0, 0, 0});
      break;
    case TrajectoryKind::arc: {
      double heading = 0.0;
      for (int i = 0; i < n_frames - 1; ++i) {
        deltas.push_back({speed * std::cos(heading), speed * std::sin(heading), 0, 0, 0, turn_rate});
        heading += turn_rate;
      }
      break;
    }
    case TrajectoryKind::piecewise: {
      // Direction reverses after segments of random length, so the same spot
      // is crossed moving both ways and appearance alone cannot predict the
      // next displacement.
      int dir = 1;
      int remaining = rng.uniform_int(3, 6);
      for (int i = 0; i < n_frames - 1; ++i) {
        deltas.push_back({dir * speed, 0, 0, 0, 0, 0});
        if (--remaining == 0) {
          dir = -dir;
          remaining = rng.uniform_int(3, 6);
        }
      }
      break;
    }
  }
  return deltas;
}

SceneSpec fit_scene(int canvas_w, int canvas_h, int background_style, double pixels_per_metre,
                    std::vector<PoseDelta> trajectory, double start_psi,
                    const RobotSprite& sprite) {
  if (canvas_w < 8 || canvas_h < 8) throw std::invalid_argument("fit_scene: canvas too small");
  if (pixels_per_metre <= 0) throw std::invalid_argument("fit_scene: pixels_per_metre <= 0");

  SceneSpec spec;
  spec.canvas_w = canvas_w;
  spec.canvas_h = canvas_h;
  spec.background_style = background_style;
  spec.sprite = sprite;
  spec.pixels_per_metre = pixels_per_metre;
  spec.start_psi = start_psi;
  spec.trajectory = std::move(trajectory);

  // Sweep the sprite corners along the trajectory from a zero start to find
  // the footprint, then center it.
  double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
  double miny = minx, maxy = -minx;
  Pose p{0, 0, start_psi};
  for (int i = 0; i < spec.n_frames(); ++i) {
    if (i > 0) {
      p.x += spec.trajectory[i - 1].dx;
      p.y += spec.trajectory[i - 1].dy;
      p.psi += spec.trajectory[i - 1].dpsi;
    }
    const double c = std::cos(p.psi), s = std::sin(p.psi);
    for (const RobotFramePoint& q : sprite_corners(spec.sprite)) {
      const double wx = p.x + c * q.u - s * q.v;
      const double wy = p.y + s * q.u + c * q.v;
      minx = std::min(minx, wx);
      maxx = std::max(maxx, wx);
      miny = std::min(miny, wy);
      maxy = std::max(maxy, wy);
    }
  }

  const double margin = 1.0 / pixels_per_metre;  // one pixel
  const double wm = canvas_w / pixels_per_metre, hm = canvas_h / pixels_per_metre;
  if (maxx - minx > wm - 2 * margin || maxy - miny > hm - 2 * margin)
    throw std::invalid_argument("fit_scene: trajectory footprint does not fit the canvas");

  // Snap the start to the pixel grid so integer-pixel deltas translate the
  // sprite without resampling.
  auto snap = [&](double v) { return std::round(v * pixels_per_metre) / pixels_per_metre; };
  spec.start_x = snap((wm - (maxx - minx)) / 2 - minx);
  spec.start_y = snap((hm - (maxy - miny)) / 2 - miny);
  return spec;
}

Tensor render_background(const SceneSpec& spec) {
  const int W = spec.canvas_w, H = spec.canvas_h;
  Tensor bg(3, H, W);
  const int wall_rows = spec.background_style == 0 ? (2 * H) / 5 : 0;
  const int door_x0 = (7 * W) / 10, door_x1 = (17 * W) / 20, door_y0 = H / 10;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (y < wall_rows) {
        const bool door = x >= door_x0 && x < door_x1 && y >= door_y0;
        put_rgb(bg, y, x, door ? kDoor : kWall);
      } else {
        put_rgb(bg, y, x, kFloor);
      }
    }
  }
  return bg;
}

RenderedFrame render(const SceneSpec& spec, int frame_index) {
  const Pose p = pose_at(spec, frame_index);

  // Reject poses whose sprite leaves the canvas.
  const double c = std::cos(p.psi), s = std::sin(p.psi);
  const double wm = spec.canvas_w / spec.pixels_per_metre;
  const double hm = spec.canvas_h / spec.pixels_per_metre;
  for (const RobotFramePoint& q : sprite_corners(spec.sprite)) {
    const double wx = p.x + c * q.u - s * q.v;
    const double wy = p.y + s * q.u + c * q.v;
    if (wx < 0 || wx > wm || wy < 0 || wy > hm)
      throw std::runtime_error("render: robot leaves the canvas at frame " +
                               std::to_string(frame_index));
  }

  RenderedFrame out{render_background(spec), Tensor(1, spec.canvas_h, spec.canvas_w)};
  for (int y = 0; y < spec.canvas_h; ++y) {
    const double wy = (y + 0.5) / spec.pixels_per_metre;
    for (int x = 0; x < spec.canvas_w; ++x) {
      const double wx = (x + 0.5) / spec.pixels_per_metre;
      const RobotFramePoint q = to_robot_frame(p, wx, wy);
      if (in_body(spec.sprite, q)) {
        put_rgb(out.frame, y, x, spec.sprite.body_color);
        out.robot_mask.at(0, y, x) = 1.0;
      } else if (in_arm(spec.sprite, q)) {
        put_rgb(out.frame, y, x, spec.sprite.arm_color);
        out.robot_mask.at(0, y, x) = 1.0;
      }
    }
  }
  return out;
}

void DatasetRecord::validate() const {
  if (frames.empty()) throw std::runtime_error("dataset: no frames");
  if (masks.size() != frames.size())
    throw std::runtime_error("dataset: frame/mask count mismatch");
  if (pose_deltas.size() + 1 != frames.size())
    throw std::runtime_error("dataset: pose row count must be frame count - 1");
  if (mask_classes < 1 || mask_classes > 2)
    throw std::runtime_error("dataset: mask_classes must be 1 or 2");
  const int H = frames[0].h, W = frames[0].w;
  for (const Tensor& f : frames)
    if (f.c != 3 || f.h != H || f.w != W) throw std::runtime_error("dataset: ragged frame shapes");
  for (const Tensor& m : masks)
    if (m.c != mask_classes || m.h != H || m.w != W)
      throw std::runtime_error("dataset: mask shape mismatch");
  if (background.c != 3 || background.h != H || background.w != W)
    throw std::runtime_error("dataset: background shape mismatch");
}

DatasetRecord make_dataset(const SceneSpec& spec, int mask_classes, double fps) {
  if (mask_classes != 1 && mask_classes != 2)
    throw std::invalid_argument("make_dataset: mask_classes must be 1 or 2");
  DatasetRecord rec;
  rec.fps = fps;
  rec.pixels_per_metre = spec.pixels_per_metre;
  rec.mask_classes = mask_classes;
  rec.pose_deltas = spec.trajectory;
  rec.background = render_background(spec);
  for (int i = 0; i < spec.n_frames(); ++i) {
    RenderedFrame rf = render(spec, i);
    rec.frames.push_back(std::move(rf.frame));
    if (mask_classes == 1) {
      rec.masks.push_back(std::move(rf.robot_mask));
    } else {
      Tensor m(2, spec.canvas_h, spec.canvas_w);
      const int plane = m.plane();
      for (int p = 0; p < plane; ++p) {
        m.v[p] = rf.robot_mask.v[p];
        m.v[plane + p] = 1.0 - rf.robot_mask.v[p];
      }
      rec.masks.push_back(std::move(m));
    }
  }
  rec.validate();
  return rec;
}

namespace {
PaletteImage mask_to_palette(const Tensor& mask) {
  PaletteImage img;
  img.w = mask.w;
  img.h = mask.h;
  img.palette = {{40, 40, 40}, {255, 80, 20}};  // 0 background, 1 robot
  img.index.resize(static_cast<std::size_t>(mask.w) * mask.h);
  for (std::size_t p = 0; p < img.index.size(); ++p)
    img.index[p] = mask.v[p] > 0.5 ? 1 : 0;  // channel 0 is the robot class
  return img;
}

Tensor palette_to_mask(const PaletteImage& img, int mask_classes, const std::string& path) {
  Tensor m(mask_classes, img.h, img.w);
  const int plane = m.plane();
  for (int p = 0; p < plane; ++p) {
    if (img.index[p] > 1) throw std::runtime_error("mask " + path + ": palette index beyond 1");
    const double robot = img.index[p] == 1 ? 1.0 : 0.0;
    m.v[p] = robot;
    if (mask_classes == 2) m.v[plane + p] = 1.0 - robot;
  }
  return m;
}
}  // namespace

void export_dataset(const DatasetRecord& rec, const std::string& dir) {
  rec.validate();
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "masks");

  for (int i = 0; i < rec.n_frames(); ++i) {
    write_png_rgb8((fs::path(dir) / "frames" / (five_digit(i) + ".png")).string(),
                   tensor_to_frame(rec.frames[i]));
    write_png_palette((fs::path(dir) / "masks" / (five_digit(i) + ".png")).string(),
                      mask_to_palette(rec.masks[i]));
  }
  write_png_rgb8((fs::path(dir) / "background.png").string(), tensor_to_frame(rec.background));

  std::ofstream csv(fs::path(dir) / "poses.csv");
  if (!csv) throw std::runtime_error("cannot write poses.csv under " + dir);
  csv << "dx,dy,dz,dphi,dtheta,dpsi\n";
  for (const PoseDelta& d : rec.pose_deltas) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", d.dx, d.dy, d.dz, d.dphi,
                  d.dtheta, d.dpsi);
    csv << buf;
  }
  if (!csv) throw std::runtime_error("write failed for poses.csv under " + dir);

  std::ofstream meta(fs::path(dir) / "meta.txt");
  meta << std::setprecision(17) << "fps = " << rec.fps << '\n'
       << "pixels_per_metre = " << rec.pixels_per_metre << '\n'
       << "mask_classes = " << rec.mask_classes << '\n';
  if (!meta) throw std::runtime_error("write failed for meta.txt under " + dir);
}

DatasetRecord load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw std::runtime_error("dataset directory missing: " + dir);
  for (const char* req : {"frames", "masks", "poses.csv", "meta.txt", "background.png"})
    if (!fs::exists(root / req))
      throw std::runtime_error("dataset " + dir + ": missing " + req);

  DatasetRecord rec;
  const KeyValues meta = KeyValues::parse_file((root / "meta.txt").string());
  rec.fps = meta.get_real("fps");
  rec.pixels_per_metre = meta.get_real("pixels_per_metre");
  rec.mask_classes = meta.get_int("mask_classes");
  rec.background = frame_to_tensor(read_png_rgb8((root / "background.png").string()));

  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(root / "frames"))
    if (e.path().extension() == ".png") ++n;
  if (n == 0) throw std::runtime_error("dataset " + dir + ": no frames");
  for (std::size_t i = 0; i < n; ++i) {
    const fs::path fp = root / "frames" / (five_digit(static_cast<int>(i)) + ".png");
    const fs::path mp = root / "masks" / (five_digit(static_cast<int>(i)) + ".png");
    if (!fs::exists(fp) || !fs::exists(mp))
      throw std::runtime_error("dataset " + dir + ": frame/mask " + five_digit(static_cast<int>(i)) +
                               " missing (files must be contiguous from 00000)");
    rec.frames.push_back(frame_to_tensor(read_png_rgb8(fp.string())));
    rec.masks.push_back(palette_to_mask(read_png_palette(mp.string()), rec.mask_classes, mp.string()));
  }

  std::ifstream csv(root / "poses.csv");
  std::string line;
  if (!std::getline(csv, line) || line != "dx,dy,dz,dphi,dtheta,dpsi")
    throw std::runtime_error("dataset " + dir + ": poses.csv header mismatch");
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::array<double, 6> vals{};
    for (int f = 0; f < 6; ++f) {
      if (!std::getline(row, field, ','))
        throw std::runtime_error("dataset " + dir + ": short row in poses.csv: " + line);
      try {
        vals[f] = std::stod(field);
      } catch (const std::exception&) {
        throw std::runtime_error("dataset " + dir + ": bad number in poses.csv: " + field);
      }
    }
    if (std::getline(row, field, ','))
      throw std::runtime_error("dataset " + dir + ": extra fields in poses.csv: " + line);
    rec.pose_deltas.push_back(PoseDelta::from_array(vals));
  }
  if (rec.pose_deltas.size() + 1 != rec.frames.size())
    throw std::runtime_error("dataset " + dir + ": poses.csv has " +
                             std::to_string(rec.pose_deltas.size()) + " rows, expected " +
                             std::to_string(rec.frames.size() - 1));
  rec.validate();
  return rec;
}

}  // namespace robodiff
