#include "robodiff/schedule.hpp"

#include <stdexcept>
#include <string>

namespace robodiff {

double VarianceSchedule::beta_at(int t) const {
  check_step(t);
  return beta[t - 1];
}

double VarianceSchedule::alpha_at(int t) const {
  check_step(t);
  return alpha[t - 1];
}

double VarianceSchedule::alpha_bar_at(int t) const {
  if (t == 0) return 1.0;
  check_step(t);
  return alpha_bar[t - 1];
}

void VarianceSchedule::check_step(int t) const {
  if (t < 1 || t > T)
    throw std::invalid_argument("diffusion step t=" + std::to_string(t) + " outside [1, " +
                                std::to_string(T) + "]");
}

VarianceSchedule make_schedule(int T, double beta_start, double beta_end, ScheduleKind kind) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_end < 1.0))
    throw std::invalid_argument("make_schedule: beta endpoints must lie in (0, 1)");
  if (beta_start > beta_end)
    throw std::invalid_argument("make_schedule: beta_start > beta_end");
  if (kind != ScheduleKind::linear)
    throw std::invalid_argument("make_schedule: unknown schedule kind");

  VarianceSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    double b = T == 1 ? beta_start
                      : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (T - 1);
    s.beta[i] = b;
    s.alpha[i] = 1.0 - b;
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

}  // namespace robodiff
