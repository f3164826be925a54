#pragma once

#include <array>
#include <string>
#include <vector>

#include "robodiff/dataset.hpp"
#include "robodiff/tensor.hpp"

namespace robodiff {

// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1, valid windows only, averaged over channels.
// Inputs must already live in [0,1].
double ssim(const Tensor& a, const Tensor& b);

// Maps a [-1,1] frame to [0,1] for ssim().
Tensor to_unit_range(const Tensor& frame);

// The seven Hu invariants of a binary mask (any single-channel tensor;
// pixels > 0.5 are foreground at integer coordinates).
struct HuVector {
  std::array<double, 7> h{};
};
HuVector hu_moments(const Tensor& mask);

// Diagnostic rescaling -sign(h)*log10|h|; never used for reported distances.
HuVector hu_log_scaled(const HuVector& v);

// Euclidean distance between the raw Hu vectors of two nonempty masks.
double hu_distance(const Tensor& m_orig, const Tensor& m_gen);

// Pixel-count intersection over union. Both masks empty -> 1; exactly one
// empty -> 0.
double iou(const Tensor& m_orig, const Tensor& m_gen);

// Robot mask for a generated frame: mean absolute channel difference against
// the known background (both [-1,1], difference measured on the [0,1] scale)
// thresholded at `threshold`, then the largest 8-connected component.
// Returns an all-zero mask when nothing crosses the threshold.
Tensor mask_from_background_subtraction(const Tensor& frame, const Tensor& background,
                                        double threshold = 0.1);

struct FrameMetrics {
  double ssim = 0.0;
  double hu_distance = 0.0;  // meaningless when hu_valid is false
  double iou = 0.0;
  bool hu_valid = true;
};

// Per-frame metrics plus aggregates. Hu rows for empty generated masks are
// excluded from the Hu mean/std and counted in empty_gen_masks; if every row
// is excluded the Hu mean is +inf (no shape retained at all). Std is the
// population standard deviation.
struct MetricsReport {
  std::vector<FrameMetrics> rows;
  double ssim_mean = 0.0, ssim_std = 0.0;
  double hu_mean = 0.0, hu_std = 0.0;
  double iou_mean = 0.0, iou_std = 0.0;
  int empty_gen_masks = 0;
  std::string mask_source;
};

// Compares gen_frames[i] with orig.frames[offset + i]. Ground-truth robot
// masks come from the record; generated robot masks are taken from gen_masks
// (channel 0) or, in the two-sequence overload, derived by background
// subtraction against orig.background.
MetricsReport evaluate_sequence(const DatasetRecord& orig, const std::vector<Tensor>& gen_frames,
                                const std::vector<Tensor>& gen_masks, int offset = 0);
MetricsReport evaluate_sequence(const DatasetRecord& orig, const std::vector<Tensor>& gen_frames,
                                int offset = 0);

// CSV: comment header recording the mask source, `frame,ssim,hu_distance,iou`
// rows, then `mean` and `std` summary rows.
void write_report_csv(const MetricsReport& report, const std::string& path);

}  // namespace robodiff
