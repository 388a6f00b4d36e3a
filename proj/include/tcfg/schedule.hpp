#pragma once

#include <cstdint>
#include <span>

#include "tcfg/matrix.hpp"

namespace tcfg {

// Discrete variance-preserving DDPM schedule. Steps are 1-based; index 0 is
// the clean-data boundary with alpha_bar(0) == 1.
class NoiseSchedule {
 public:
  NoiseSchedule(Vector betas);

  int steps() const noexcept { return static_cast<int>(betas_.size()) - 1; }
  double beta(int t) const { return betas_.at(check_step(t, 1)); }
  double alpha(int t) const { return alphas_.at(check_step(t, 1)); }
  double alpha_bar(int t) const { return alpha_bars_.at(check_step(t, 0)); }

  std::span<const double> betas() const noexcept { return {betas_.data() + 1, betas_.size() - 1}; }

  // FNV-1a over the raw beta bytes; stored in checkpoints.
  std::uint64_t hash() const noexcept;

 private:
  std::size_t check_step(int t, int lo) const;

  Vector betas_;       // [0] unused
  Vector alphas_;      // [0] unused
  Vector alpha_bars_;  // [0] == 1
};

// beta_t linearly spaced from beta_min at t = 1 to beta_max at t = T.
NoiseSchedule linear_beta_schedule(int steps, double beta_min, double beta_max);

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, for 0 <= t <= T.
Vector forward_diffuse(std::span<const double> x0, int t, std::span<const double> eps,
                       const NoiseSchedule& sched);

// score = -eps / sqrt(1 - abar_t). t = 0 throws kDivisionByZero.
Vector eps_to_score(std::span<const double> eps_hat, int t, const NoiseSchedule& sched);
Vector score_to_eps(std::span<const double> score, int t, const NoiseSchedule& sched);

}  // namespace tcfg
