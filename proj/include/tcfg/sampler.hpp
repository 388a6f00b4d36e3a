#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tcfg/dataset.hpp"
#include "tcfg/guidance.hpp"
#include "tcfg/matrix.hpp"
#include "tcfg/model.hpp"
#include "tcfg/rng.hpp"
#include "tcfg/schedule.hpp"

namespace tcfg::sampler {

// Produces eps predictions for (z, t, label in {0, 1, 2}). Implementations
// must be safe for concurrent const calls.
class ScoreSource {
 public:
  virtual ~ScoreSource() = default;
  virtual Vector eps(std::span<const double> z, int t, int label) const = 0;
  virtual std::size_t dim() const = 0;
};

class ModelSource final : public ScoreSource {
 public:
  explicit ModelSource(const model::ScoreModel& m) : model_(m) {}
  Vector eps(std::span<const double> z, int t, int label) const override {
    return model_.forward(z, t, label);
  }
  std::size_t dim() const override { return model_.config().data_dim; }

 private:
  const model::ScoreModel& model_;
};

// Exact eps of the empirical data distribution diffused to step t:
//   E[x0 | z] = sum_i x_i softmax_i(-|z - sqrt(abar) x_i|^2 / (2 (1 - abar)))
//   eps*      = (z - sqrt(abar) E[x0 | z]) / sqrt(1 - abar)
// over points with the requested label (all points for the null label 2).
Vector analytic_eps(std::span<const dataset::LabeledPoint> data, std::span<const double> z, int t,
                    int label, const NoiseSchedule& sched);

class AnalyticSource final : public ScoreSource {
 public:
  AnalyticSource(std::vector<dataset::LabeledPoint> data, const NoiseSchedule& sched);
  Vector eps(std::span<const double> z, int t, int label) const override;
  std::size_t dim() const override { return dim_; }
  std::span<const dataset::LabeledPoint> data() const noexcept { return data_; }

 private:
  std::vector<dataset::LabeledPoint> data_;
  NoiseSchedule sched_;
  std::size_t dim_;
  Matrix by_label_[3];  // rows grouped by label; [2] holds every point
};

// z_{t-1} = (z_t - beta_t / sqrt(1 - abar_t) eps) / sqrt(alpha_t) + sqrt(beta_t) xi,
// with the noise term dropped at t = 1 or when noise_on is false.
Vector ddpm_step(std::span<const double> z_t, std::span<const double> eps_hat, int t,
                 const NoiseSchedule& sched, Rng& rng, bool noise_on = true);

struct Trajectory {
  int label = 0;
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::vector<Vector> states;  // z_T ... z_0, T + 1 entries
  // Score-space values evaluated at states[k], i.e. at step t = T - k.
  std::vector<Vector> uncond_scores;
  std::vector<Vector> cond_scores;
  std::vector<Vector> guided_scores;

  int steps() const noexcept { return static_cast<int>(uncond_scores.size()); }
  std::size_t slot(int t) const;  // index into the score arrays for step t
};

struct SampleOptions {
  guidance::GuidanceConfig guidance;
  int label = 0;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  bool record = false;
  bool noise_on = true;
};

struct SampleResult {
  std::vector<Vector> samples;
  std::vector<Trajectory> trajectories;
};

// Runs all n chains in lockstep from z_T ~ N(0, I). Chain i draws from
// make_stream(seed, i), so outputs do not depend on n except in the pooled
// mode, where the projection couples the chains.
SampleResult sample(const ScoreSource& source, const NoiseSchedule& sched,
                    const SampleOptions& options);

// Final samples as `x0,x1,label,mode,seed`.
std::string samples_csv(std::span<const Vector> samples, int label, guidance::Mode mode,
                        std::uint64_t seed);
std::string trajectories_json(std::span<const Trajectory> trajectories, guidance::Mode mode);

}  // namespace tcfg::sampler
