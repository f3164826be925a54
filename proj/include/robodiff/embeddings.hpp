#pragma once

#include <array>
#include <vector>

namespace robodiff {

// Robot pose change between two frames: (dx, dy, dz) metres, (dphi, dtheta,
// dpsi) radians. Planar robots carry exact zeros in dz, dphi, dtheta.
struct PoseDelta {
  double dx = 0, dy = 0, dz = 0;
  double dphi = 0, dtheta = 0, dpsi = 0;

  std::array<double, 6> to_array() const { return {dx, dy, dz, dphi, dtheta, dpsi}; }
  static PoseDelta from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  bool all_finite() const;

  PoseDelta& operator+=(const PoseDelta& o) {
    dx += o.dx; dy += o.dy; dz += o.dz;
    dphi += o.dphi; dtheta += o.dtheta; dpsi += o.dpsi;
    return *this;
  }
};

// Per-block conditioning vector after fusing the step, frame-gap and pose
// embeddings.
struct ConditioningVector {
  std::vector<double> values;
  int width() const { return static_cast<int>(values.size()); }
};

// Interleaved (sin, cos) pairs at frequencies 2^j * pi, j = 0..L-1.
// Output length 2L: out[2j] = sin(2^j pi p), out[2j+1] = cos(2^j pi p).
std::vector<double> sinusoidal_embed(double p, int L);

// Linear embedding A * dp + b; A is row-major (D x 6), b has length D.
std::vector<double> pose_embed(const PoseDelta& dp, const std::vector<double>& A,
                               const std::vector<double>& b);

// Concatenate (t_emb, k_emb, pose_emb) and apply one affine map to width D.
// W is row-major (D x total input width), bias has length D. pose_emb may be
// empty for unconditioned variants.
ConditioningVector fuse_conditions(const std::vector<double>& t_emb,
                                   const std::vector<double>& k_emb,
                                   const std::vector<double>& pose_emb,
                                   const std::vector<double>& W, const std::vector<double>& bias);

}  // namespace robodiff
