#include "tcfg/schedule.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "tcfg/error.hpp"

namespace tcfg {

NoiseSchedule::NoiseSchedule(Vector betas) {
  if (betas.empty()) throw Error(ErrorKind::kInvalidSchedule, "schedule: need at least one step");
  betas_.reserve(betas.size() + 1);
  betas_.push_back(0.0);
  alphas_.push_back(1.0);
  alpha_bars_.push_back(1.0);
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) {
      throw Error(ErrorKind::kInvalidSchedule, "schedule: beta must lie in (0, 1)");
    }
    betas_.push_back(b);
    alphas_.push_back(1.0 - b);
    alpha_bars_.push_back(alpha_bars_.back() * (1.0 - b));
  }
  if (!(alpha_bars_.back() > 0.0)) {
    throw Error(ErrorKind::kInvalidSchedule, "schedule: alpha_bar underflows to zero");
  }
}

std::size_t NoiseSchedule::check_step(int t, int lo) const {
  if (t < lo || t > steps()) {
    throw Error(ErrorKind::kInvalidStep, "step " + std::to_string(t) + " outside [" +
                                             std::to_string(lo) + ", " + std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t);
}

std::uint64_t NoiseSchedule::hash() const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 1; i < betas_.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &betas_[i], sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

NoiseSchedule linear_beta_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw Error(ErrorKind::kInvalidSchedule, "schedule: steps must be >= 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw Error(ErrorKind::kInvalidSchedule, "schedule: need 0 < beta_min <= beta_max < 1");
  }
  Vector betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    betas[i] = steps == 1 ? beta_min
                          : beta_min + (beta_max - beta_min) * static_cast<double>(i) / (steps - 1);
  }
  if (steps > 1) betas.back() = beta_max;
  return NoiseSchedule(std::move(betas));
}

Vector forward_diffuse(std::span<const double> x0, int t, std::span<const double> eps,
                       const NoiseSchedule& sched) {
  if (x0.size() != eps.size()) throw Error(ErrorKind::kDimensionMismatch, "forward_diffuse: size mismatch");
  const double abar = sched.alpha_bar(t);
  const double a = std::sqrt(abar);
  const double s = std::sqrt(1.0 - abar);
  Vector z(x0.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x0[i] + s * eps[i];
  return z;
}

namespace {
double noise_scale(int t, const NoiseSchedule& sched) {
  const double abar = sched.alpha_bar(t);
  if (t == 0 || abar >= 1.0) {
    throw Error(ErrorKind::kDivisionByZero, "score/eps conversion undefined at t = 0");
  }
  return std::sqrt(1.0 - abar);
}
}  // namespace

Vector eps_to_score(std::span<const double> eps_hat, int t, const NoiseSchedule& sched) {
  return scaled(eps_hat, -1.0 / noise_scale(t, sched));
}

Vector score_to_eps(std::span<const double> score, int t, const NoiseSchedule& sched) {
  return scaled(score, -noise_scale(t, sched));
}

}  // namespace tcfg
