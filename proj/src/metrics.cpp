#include "robodiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace robodiff {

namespace {
constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin * kWin>& gaussian_window() {
  static const std::array<double, kWin * kWin> w = [] {
    std::array<double, kWin * kWin> g{};
    double sum = 0.0;
    for (int y = 0; y < kWin; ++y) {
      for (int x = 0; x < kWin; ++x) {
        const double dy = y - kWin / 2, dx = x - kWin / 2;
        g[y * kWin + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        sum += g[y * kWin + x];
      }
    }
    for (double& v : g) v /= sum;
    return g;
  }();
  return w;
}

bool fg(double v) { return v > 0.5; }

int count_fg(const Tensor& m) {
  int n = 0;
  for (double v : m.v)
    if (fg(v)) ++n;
  return n;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}
double std_of(const std::vector<double>& xs, double mean) {
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size()));
}
}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  if (a.h < kWin || a.w < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const auto& win = gaussian_window();
  double total = 0.0;
  long long n_windows = 0;
  for (int c = 0; c < a.c; ++c) {
    for (int y = 0; y + kWin <= a.h; ++y) {
      for (int x = 0; x + kWin <= a.w; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int wy = 0; wy < kWin; ++wy) {
          for (int wx = 0; wx < kWin; ++wx) {
            const double wgt = win[wy * kWin + wx];
            const double va = a.at(c, y + wy, x + wx);
            const double vb = b.at(c, y + wy, x + wx);
            ma += wgt * va;
            mb += wgt * vb;
            saa += wgt * va * va;
            sbb += wgt * vb * vb;
            sab += wgt * va * vb;
          }
        }
        const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                 ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
        ++n_windows;
      }
    }
  }
  return total / static_cast<double>(n_windows);
}

Tensor to_unit_range(const Tensor& frame) {
  Tensor out(frame.c, frame.h, frame.w);
  for (std::size_t i = 0; i < frame.size(); ++i) out.v[i] = (frame.v[i] + 1.0) * 0.5;
  return out;
}

HuVector hu_moments(const Tensor& mask) {
  // Raw moments over the foreground lattice points, then central moments via
  // the usual translation algebra, then scale normalization.
  double m00 = 0, m10 = 0, m01 = 0, m20 = 0, m11 = 0, m02 = 0;
  double m30 = 0, m21 = 0, m12 = 0, m03 = 0;
  for (int c = 0; c < mask.c; ++c) {
    for (int y = 0; y < mask.h; ++y) {
      for (int x = 0; x < mask.w; ++x) {
        if (!fg(mask.at(c, y, x))) continue;
        const double X = x, Y = y;
        m00 += 1;
        m10 += X;
        m01 += Y;
        m20 += X * X;
        m11 += X * Y;
        m02 += Y * Y;
        m30 += X * X * X;
        m21 += X * X * Y;
        m12 += X * Y * Y;
        m03 += Y * Y * Y;
      }
    }
  }
  if (m00 <= 0) throw std::invalid_argument("hu_moments: empty mask");

  const double xb = m10 / m00, yb = m01 / m00;
  const double mu20 = m20 - xb * m10;
  const double mu02 = m02 - yb * m01;
  const double mu11 = m11 - xb * m01;
  const double mu30 = m30 - 3 * xb * m20 + 2 * xb * xb * m10;
  const double mu03 = m03 - 3 * yb * m02 + 2 * yb * yb * m01;
  const double mu21 = m21 - 2 * xb * m11 - yb * m20 + 2 * xb * xb * m01;
  const double mu12 = m12 - 2 * yb * m11 - xb * m02 + 2 * yb * yb * m10;

  const double n2 = m00 * m00;                // mu00^((p+q)/2 + 1), p+q = 2
  const double n3 = std::pow(m00, 2.5);       // p+q = 3
  const double e20 = mu20 / n2, e02 = mu02 / n2, e11 = mu11 / n2;
  const double e30 = mu30 / n3, e03 = mu03 / n3, e21 = mu21 / n3, e12 = mu12 / n3;

  HuVector hv;
  const double a = e30 + e12, b = e21 + e03;
  hv.h[0] = e20 + e02;
  hv.h[1] = (e20 - e02) * (e20 - e02) + 4 * e11 * e11;
  hv.h[2] = (e30 - 3 * e12) * (e30 - 3 * e12) + (3 * e21 - e03) * (3 * e21 - e03);
  hv.h[3] = a * a + b * b;
  hv.h[4] = (e30 - 3 * e12) * a * (a * a - 3 * b * b) + (3 * e21 - e03) * b * (3 * a * a - b * b);
  hv.h[5] = (e20 - e02) * (a * a - b * b) + 4 * e11 * a * b;
  hv.h[6] = (3 * e21 - e03) * a * (a * a - 3 * b * b) - (e30 - 3 * e12) * b * (3 * a * a - b * b);
  return hv;
}

HuVector hu_log_scaled(const HuVector& v) {
  HuVector out;
  for (int i = 0; i < 7; ++i) {
    const double h = v.h[i];
    out.h[i] = h == 0.0 ? 0.0 : -std::copysign(std::log10(std::abs(h)), h);
  }
  return out;
}

double hu_distance(const Tensor& m_orig, const Tensor& m_gen) {
  const HuVector a = hu_moments(m_orig), b = hu_moments(m_gen);
  double s = 0.0;
  for (int i = 0; i < 7; ++i) s += (a.h[i] - b.h[i]) * (a.h[i] - b.h[i]);
  return std::sqrt(s);
}

double iou(const Tensor& m_orig, const Tensor& m_gen) {
  require_same_shape(m_orig, m_gen, "iou");
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < m_orig.size(); ++i) {
    const bool a = fg(m_orig.v[i]), b = fg(m_gen.v[i]);
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 1.0;  // both empty
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Tensor mask_from_background_subtraction(const Tensor& frame, const Tensor& background,
                                        double threshold) {
  require_same_shape(frame, background, "mask_from_background_subtraction");
  if (frame.c != 3) throw std::invalid_argument("mask_from_background_subtraction: need RGB");
  const int H = frame.h, W = frame.w, plane = frame.plane();

  std::vector<char> candidate(static_cast<std::size_t>(plane), 0);
  for (int p = 0; p < plane; ++p) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) d += std::abs(frame.v[c * plane + p] - background.v[c * plane + p]);
    // channels are [-1,1]; halve to get the [0,1]-scale difference
    candidate[p] = (d / 3.0) * 0.5 > threshold;
  }

  // Largest 8-connected component (diagonal adjacency keeps a rotated thin
  // arm attached to the body), scan order breaking ties.
  std::vector<int> label(static_cast<std::size_t>(plane), -1);
  int best_label = -1, best_size = 0, next = 0;
  std::vector<int> stack;
  for (int start = 0; start < plane; ++start) {
    if (!candidate[start] || label[start] != -1) continue;
    const int cur = next++;
    int size = 0;
    stack.assign(1, start);
    label[start] = cur;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++size;
      const int y = p / W, x = p % W;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
          const int q = ny * W + nx;
          if (candidate[q] && label[q] == -1) {
            label[q] = cur;
            stack.push_back(q);
          }
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_label = cur;
    }
  }

  Tensor mask(1, H, W);
  if (best_label >= 0)
    for (int p = 0; p < plane; ++p)
      if (label[p] == best_label) mask.v[p] = 1.0;
  return mask;
}

namespace {
Tensor robot_channel(const Tensor& mask) {
  Tensor out(1, mask.h, mask.w);
  std::copy(mask.v.begin(), mask.v.begin() + mask.plane(), out.v.begin());
  return out;
}

MetricsReport evaluate_impl(const DatasetRecord& orig, const std::vector<Tensor>& gen_frames,
                            const std::vector<Tensor>& gen_masks, int offset,
                            std::string mask_source) {
  orig.validate();
  if (gen_masks.size() != gen_frames.size())
    throw std::invalid_argument("evaluate_sequence: frame/mask sequence lengths differ");
  if (offset < 0 || offset + static_cast<int>(gen_frames.size()) > orig.n_frames())
    throw std::invalid_argument("evaluate_sequence: generated sequence does not fit the record");

  MetricsReport rep;
  rep.mask_source = std::move(mask_source);
  std::vector<double> ssims, hus, ious;
  for (std::size_t i = 0; i < gen_frames.size(); ++i) {
    const Tensor& fo = orig.frames[offset + i];
    const Tensor& fg_ = gen_frames[i];
    const Tensor mo = robot_channel(orig.masks[offset + i]);
    const Tensor mg = robot_channel(gen_masks[i]);

    FrameMetrics fm;
    fm.ssim = ssim(to_unit_range(fo), to_unit_range(fg_));
    fm.iou = iou(mo, mg);
    const bool both_nonempty = count_fg(mo) > 0 && count_fg(mg) > 0;
    if (both_nonempty) {
      fm.hu_distance = hu_distance(mo, mg);
      hus.push_back(fm.hu_distance);
    } else {
      fm.hu_valid = false;
      ++rep.empty_gen_masks;
    }
    ssims.push_back(fm.ssim);
    ious.push_back(fm.iou);
    rep.rows.push_back(fm);
  }

  if (!rep.rows.empty()) {
    rep.ssim_mean = mean_of(ssims);
    rep.ssim_std = std_of(ssims, rep.ssim_mean);
    rep.iou_mean = mean_of(ious);
    rep.iou_std = std_of(ious, rep.iou_mean);
    if (!hus.empty()) {
      rep.hu_mean = mean_of(hus);
      rep.hu_std = std_of(hus, rep.hu_mean);
    } else {
      rep.hu_mean = std::numeric_limits<double>::infinity();
      rep.hu_std = 0.0;
    }
  }
  return rep;
}
}  // namespace

MetricsReport evaluate_sequence(const DatasetRecord& orig, const std::vector<Tensor>& gen_frames,
                                const std::vector<Tensor>& gen_masks, int offset) {
  return evaluate_impl(orig, gen_frames, gen_masks, offset, "provided");
}

MetricsReport evaluate_sequence(const DatasetRecord& orig, const std::vector<Tensor>& gen_frames,
                                int offset) {
  std::vector<Tensor> masks;
  masks.reserve(gen_frames.size());
  for (const Tensor& f : gen_frames)
    masks.push_back(mask_from_background_subtraction(f, orig.background));
  return evaluate_impl(orig, gen_frames, masks, offset,
                       "background_subtraction(threshold=0.1,largest_8connected_component)");
}

void write_report_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report " + path);
  out << "# mask_source = " << report.mask_source << '\n'
      << "# empty_gen_masks = " << report.empty_gen_masks << '\n'
      << "frame,ssim,hu_distance,iou\n";
  char buf[160];
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const FrameMetrics& fm = report.rows[i];
    if (fm.hu_valid)
      std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", i, fm.ssim, fm.hu_distance, fm.iou);
    else
      std::snprintf(buf, sizeof buf, "%zu,%.9g,nan,%.9g\n", i, fm.ssim, fm.iou);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.9g,%.9g,%.9g\n", report.ssim_mean, report.hu_mean,
                report.iou_mean);
  out << buf;
  std::snprintf(buf, sizeof buf, "std,%.9g,%.9g,%.9g\n", report.ssim_std, report.hu_std,
                report.iou_std);
  out << buf;
  if (!out) throw std::runtime_error("write failed for report " + path);
}

}  // namespace robodiff
