#pragma once

#include <array>
#include <string>
#include <vector>

#include "robodiff/embeddings.hpp"
#include "robodiff/rng.hpp"
#include "robodiff/tensor.hpp"

namespace robodiff {

enum class TrajectoryKind { line, arc, piecewise };
TrajectoryKind trajectory_kind_from_string(const std::string& s);
std::string to_string(TrajectoryKind k);

// Sprite geometry in metres, colors in [0,1] RGB. The body is an axis-aligned
// rectangle in the robot frame; the arm is a thin bar sticking out of the
// front (+u) side. Colors are chosen to sit well clear of every background
// color so background subtraction recovers the robot exactly.
struct RobotSprite {
  double body_w = 2.0, body_h = 1.2;
  double arm_len = 1.2, arm_th = 0.5;
  std::array<double, 3> body_color{0.90, 0.25, 0.10};
  std::array<double, 3> arm_color{0.95, 0.80, 0.10};
};

// A fully specified synthetic scene: canvas, background, sprite, start pose
// and per-transition pose deltas. Image axes: +x right, +y down; psi rotates
// +x toward +y (screen-clockwise).
struct SceneSpec {
  int canvas_w = 64, canvas_h = 36;
  int background_style = 0;  // 0 = room (wall + floor + door), 1 = plain floor
  RobotSprite sprite;
  double pixels_per_metre = 4.0;
  double start_x = 0.0, start_y = 0.0, start_psi = 0.0;
  std::vector<PoseDelta> trajectory;  // length n_frames - 1

  int n_frames() const { return static_cast<int>(trajectory.size()) + 1; }
};

struct Pose {
  double x = 0, y = 0, psi = 0;
};
// Start pose with deltas 0..frame_index-1 integrated.
Pose pose_at(const SceneSpec& spec, int frame_index);

// Planar trajectories: dz = dphi = dtheta = 0 exactly.
//   line       straight +x motion at `speed` metres/frame; no rotation
//   arc        constant turn_rate rad/frame, speed along the current heading
//   piecewise  +x/-x shuttling: constant speed, direction flips after a
//              random 3..6-frame segment (rng-driven), no rotation
std::vector<PoseDelta> gen_trajectory(TrajectoryKind kind, int n_frames, double speed,
                                      double turn_rate, Rng& rng);

// Builds a SceneSpec whose start pose centers the swept robot footprint on
// the canvas (snapped to the pixel grid); throws if the trajectory cannot fit.
SceneSpec fit_scene(int canvas_w, int canvas_h, int background_style, double pixels_per_metre,
                    std::vector<PoseDelta> trajectory, double start_psi = 0.0,
                    const RobotSprite& sprite = {});

// Pure background, no robot; (3, H, W) in [-1, 1].
Tensor render_background(const SceneSpec& spec);

struct RenderedFrame {
  Tensor frame;       // (3, H, W) in [-1, 1]
  Tensor robot_mask;  // (1, H, W) in {0, 1}
};
RenderedFrame render(const SceneSpec& spec, int frame_index);

// One video worth of aligned data plus the metadata needed to reproduce and
// evaluate it. |frames| == |masks| == |pose_deltas| + 1.
struct DatasetRecord {
  std::vector<Tensor> frames;
  std::vector<Tensor> masks;  // (mask_classes, H, W); S=1 robot, S=2 adds background
  std::vector<PoseDelta> pose_deltas;
  double fps = 1.0;
  double pixels_per_metre = 4.0;
  int mask_classes = 1;
  Tensor background;

  int n_frames() const { return static_cast<int>(frames.size()); }
  void validate() const;  // throws on inconsistent lengths/shapes
};

DatasetRecord make_dataset(const SceneSpec& spec, int mask_classes, double fps = 1.0);

// Directory layout: frames/%05d.png (8-bit RGB), masks/%05d.png (palette,
// index 1 = robot), poses.csv (`dx,dy,dz,dphi,dtheta,dpsi`, 6 decimals),
// background.png, meta.txt. Loading inverts exporting up to the 8-bit frame
// quantization.
void export_dataset(const DatasetRecord& rec, const std::string& dir);
DatasetRecord load_dataset(const std::string& dir);

}  // namespace robodiff
