#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcfg/dataset.hpp"
#include "tcfg/linalg.hpp"
#include "tcfg/matrix.hpp"
#include "tcfg/sampler.hpp"
#include "tcfg/schedule.hpp"
#include "tcfg/spectral_gap.hpp"

namespace tcfg::analysis {

struct ScoreMatrices {
  Matrix uncond;  // N x d
  Matrix cond;    // N x d
};

// Row i holds trajectory i's recorded scores at step t.
ScoreMatrices score_matrices(std::span<const sampler::Trajectory> trajectories, int t);

enum class AlignmentMode { kIndexed, kGreedy };

struct AlignmentCurve {
  Vector values;                     // |cos|, one per conditional vector
  std::vector<std::size_t> matched;  // unconditional index paired with each
};

// Indexed: |cos(v_i, v^_i)|. Greedy: conditional vectors in order each take
// the unused unconditional vector with the highest |cos|.
AlignmentCurve alignment_curves(const Matrix& right_uncond, const Matrix& right_cond,
                                AlignmentMode mode);

// |T_p s| / |N_p s| at the moons projection of `point`; +infinity when the
// normal component vanishes.
double normal_tangent_ratio(std::span<const double> score, std::span<const double> point);

// Noise-free two moons embedded isometrically in R^D. Score samples are drawn
// around one anchor on an arc, z = sqrt(abar) anchor + sqrt(1 - abar) eps,
// and scored with the exact analytic oracle.
struct EmbeddedMoonsSetup {
  std::size_t ambient_dim = 10;
  std::size_t data_points = 6000;
  std::size_t n_scores = 2000;
  int anchor_label = 0;
  double anchor_angle = std::numbers::pi / 2;
  std::uint64_t seed = 0;
};

class EmbeddedMoons {
 public:
  EmbeddedMoons(const EmbeddedMoonsSetup& setup, const NoiseSchedule& sched);

  const EmbeddedMoonsSetup& setup() const noexcept { return setup_; }
  const dataset::IsometricEmbedding& embedding() const noexcept { return embedding_; }
  const Vector& anchor() const noexcept { return anchor_; }
  const sampler::AnalyticSource& source() const noexcept { return source_; }

  ScoreMatrices scores(int t) const;

 private:
  EmbeddedMoonsSetup setup_;
  NoiseSchedule sched_;
  dataset::IsometricEmbedding embedding_;
  Vector anchor_;
  sampler::AnalyticSource source_;
};

struct SpectrumReport {
  std::vector<int> timesteps;
  std::vector<Vector> uncond;  // per timestep, descending
  std::vector<Vector> cond;
  std::vector<GapResult> uncond_gap;
  std::vector<GapResult> cond_gap;
  std::size_t n_samples = 0;
  std::size_t dim = 0;
};

struct AlignmentReport {
  std::vector<int> timesteps;
  std::vector<AlignmentCurve> indexed;
  std::vector<AlignmentCurve> greedy;
  std::vector<GapResult> gap;  // of the unconditional spectrum
};

using ScoreProvider = std::function<ScoreMatrices(int)>;

SpectrumReport spectrum_report(const ScoreProvider& provider, std::span<const int> timesteps,
                               double gap_ratio = kDefaultGapRatio);
AlignmentReport alignment_report(const ScoreProvider& provider, std::span<const int> timesteps,
                                 double gap_ratio = kDefaultGapRatio);

// Mean of values[0, retained) minus mean of values[retained, end).
double alignment_margin(const AlignmentCurve& curve, std::size_t retained);

std::string to_json(const SpectrumReport& r);
std::string to_csv(const SpectrumReport& r);  // timestep,kind,index,value
std::string to_json(const AlignmentReport& r);
std::string to_csv(const AlignmentReport& r);  // timestep,mode,index,value

// Median over trajectories of the tangent/normal ratio of each recorded score
// kind at every step, from t = T down to 1.
struct TrajectoryRatios {
  std::vector<int> timesteps;
  Vector uncond_median;
  Vector cond_median;
  Vector guided_median;
};

TrajectoryRatios trajectory_ratios(std::span<const sampler::Trajectory> trajectories);

}  // namespace tcfg::analysis
