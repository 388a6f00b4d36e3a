#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcfg/matrix.hpp"
#include "tcfg/spectral_gap.hpp"

namespace tcfg::guidance {

enum class Mode { kCondOnly, kCfg, kTcfg, kPooledTcfg };

std::string_view to_string(Mode mode);
// Accepts the CLI spellings cond | cfg | tcfg | tcfg-pooled.
Mode parse_mode(std::string_view name);

// Unconditional and conditional predictions for one sample at one step. Both
// must live in the same space (eps or score).
struct ScorePair {
  Vector uncond;
  Vector cond;
};

struct GuidanceConfig {
  Mode mode = Mode::kTcfg;
  double scale = 2.0;  // omega = 1 + gamma
  double tie_tolerance = 1e-9;
  double gap_ratio = analysis::kDefaultGapRatio;  // pooled variant only
};

// (1 - w) uncond + w cond; w = 1 returns cond and w = 0 returns uncond
// bit-for-bit.
Vector cfg_combine(const ScorePair& pair, double w);

// Projection of the unconditional score onto the top right singular vector
// of the 2 x d matrix [uncond; cond]. Returns uncond unchanged when
// sigma_1 == 0 or sigma_1 - sigma_2 <= tie_tolerance * sigma_1.
Vector tcfg_project(const ScorePair& pair, double tie_tolerance = 1e-9);

Vector tcfg_combine(const ScorePair& pair, double w, double tie_tolerance = 1e-9);

// Stacks all 2N predictions, keeps the top-r right singular vectors with r
// from the spectral-gap rule, and projects every unconditional score onto
// their span. With no detectable gap the unconditional scores pass through.
std::vector<Vector> pooled_tcfg_project(std::span<const ScorePair> pairs,
                                        double gap_ratio = analysis::kDefaultGapRatio);

// Guided prediction for every pair under `config`.
std::vector<Vector> guide(std::span<const ScorePair> pairs, const GuidanceConfig& config);

}  // namespace tcfg::guidance
