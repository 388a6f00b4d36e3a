#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tcfg/guidance.hpp"
#include "tcfg/matrix.hpp"
#include "tcfg/sampler.hpp"
#include "tcfg/schedule.hpp"

namespace tcfg::eval {

struct DistanceStats {
  double mean = 0.0;
  double median = 0.0;
};

// Distance of each 2-D sample to the nearest moon arc, aggregated.
DistanceStats mean_manifold_distance(std::span<const Vector> samples);

struct FrechetResult {
  double value = 0.0;
  bool regularized = false;  // a covariance was rank deficient and got +1e-10 I
};

// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2) for Gaussians
// fitted (unbiased covariance) to two 2-D sample sets of at least 3 points.
FrechetResult frechet_gaussian_2d(std::span<const Vector> a, std::span<const Vector> b);

struct ModeResult {
  guidance::Mode mode = guidance::Mode::kCfg;
  DistanceStats distance;
  FrechetResult frechet;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::vector<Vector> samples;
  std::vector<int> labels;
};

struct CompareOptions {
  std::vector<guidance::Mode> modes{guidance::Mode::kCondOnly, guidance::Mode::kCfg,
                                    guidance::Mode::kTcfg, guidance::Mode::kPooledTcfg};
  double scale = 2.0;
  double tie_tolerance = 1e-9;
  std::size_t samples_per_mode = 500;  // split evenly over labels 0 and 1
  std::uint64_t seed = 0;
  bool noise_on = true;
};

// Samples every mode from the same seeds and scores it against `reference`.
std::vector<ModeResult> compare_modes(const sampler::ScoreSource& source, const NoiseSchedule& sched,
                                      std::span<const Vector> reference, const CompareOptions& options);

struct BenchReport {
  std::size_t samples = 0;
  int steps = 0;
  int repeats = 0;
  double cfg_step_median = 0.0;   // seconds per sampling step (all chains)
  double tcfg_step_median = 0.0;
  double overhead_fraction = 0.0;  // (tcfg - cfg) / cfg
  double cfg_guidance_median = 0.0;  // guidance combination only
  double tcfg_guidance_median = 0.0;
};

// Wall-clock medians of per-step cost for CFG and TCFG over identical seeds,
// alternating the two modes across `repeats` runs. Single-threaded.
BenchReport bench_overhead(const sampler::ScoreSource& source, const NoiseSchedule& sched,
                           std::size_t n, std::uint64_t seed, int repeats = 5, double scale = 2.0);

struct EvalReport {
  std::vector<std::vector<ModeResult>> per_seed;  // one entry per seed
  std::vector<std::uint64_t> seeds;
};

std::string to_json(const EvalReport& r);
std::string to_csv(const EvalReport& r);  // seed,mode,n,mean_distance,median_distance,frechet,regularized
std::string to_json(const BenchReport& r);

}  // namespace tcfg::eval
