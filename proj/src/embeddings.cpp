#include "robodiff/embeddings.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace robodiff {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool PoseDelta::all_finite() const {
  for (double x : to_array())
    if (!std::isfinite(x)) return false;
  return true;
}

std::vector<double> sinusoidal_embed(double p, int L) {
  if (L < 1) throw std::invalid_argument("sinusoidal_embed: L must be >= 1");
  if (!std::isfinite(p)) throw std::invalid_argument("sinusoidal_embed: p not finite");
  std::vector<double> out(2 * static_cast<std::size_t>(L));
  double freq = kPi;
  for (int j = 0; j < L; ++j) {
    out[2 * j] = std::sin(freq * p);
    out[2 * j + 1] = std::cos(freq * p);
    freq *= 2.0;
  }
  return out;
}

std::vector<double> pose_embed(const PoseDelta& dp, const std::vector<double>& A,
                               const std::vector<double>& b) {
  if (A.size() != b.size() * 6)
    throw std::invalid_argument("pose_embed: A must be (D x 6) with D = |b|");
  if (!dp.all_finite()) throw std::invalid_argument("pose_embed: pose delta not finite");
  const auto p = dp.to_array();
  std::vector<double> out(b.size());
  for (std::size_t d = 0; d < b.size(); ++d) {
    double acc = b[d];
     for (int j = 0; j < 6; ++j) acc += A[d * 6 + j] * p[j];
    out[d] = acc;
  }
  return out;
}

ConditioningVector fuse_conditions(const std::vector<double>& t_emb,
                                   const std::vector<double>& k_emb,
                                   const std::vector<double>& pose_emb,
                                   const std::vector<double>& W, const std::vector<double>& bias) {
  const std::size_t in_width = t_emb.size() + k_emb.size() + pose_emb.size();
  const std::size_t D = bias.size();
  if (W.size() != D * in_width)
    throw std::invalid_argument("fuse_conditions: weight is " + std::to_string(W.size()) +
                                " values, expected D*(t+k+pose) = " + std::to_string(D * in_width));
  std::vector<double> x;
  x.reserve(in_width);
  x.insert(x.end(), t_emb.begin(), t_emb.end());
  x.insert(x.end(), k_emb.begin(), k_emb.end());
  x.insert(x.end(), pose_emb.begin(), pose_emb.end());

  ConditioningVector cv;
  cv.values.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    double acc = bias[d];
    for (std::size_t j = 0; j < in_width; ++j) acc += W[d * in_width + j] * x[j];
    cv.values[d] = acc;
  }
  return cv;
}

}  // namespace robodiff
