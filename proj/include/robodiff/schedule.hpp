#pragma once

#include <vector>

namespace robodiff {

// Per-step noise variances of the forward process and the derived products.
// Index convention: step t runs 1..T, stored at [t-1]; alpha_bar_at(0) == 1.
struct VarianceSchedule {
  int T = 0;
  std::vector<double> beta;       // beta[t-1] in (0,1)
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha

  double beta_at(int t) const;
  double alpha_at(int t) const;
  double alpha_bar_at(int t) const;  // accepts t = 0
  void check_step(int t) const;      // throws unless 1 <= t <= T
};

enum class ScheduleKind { linear };

VarianceSchedule make_schedule(int T, double beta_start, double beta_end,
                               ScheduleKind kind = ScheduleKind::linear);

}  // namespace robodiff
