#pragma once

#include <cstddef>
#include <span>

namespace tcfg::analysis {

inline constexpr double kDefaultGapRatio = 1.5;

struct GapResult {
  bool found = false;
  std::size_t retained = 0;  // number of directions before the gap (1-based count)
  double ratio = 0.0;        // sigma_retained / sigma_{retained+1}
};

// argmax_i sigma_i / sigma_{i+1} over pairs with sigma_{i+1} > 0; earliest
// index wins ties. No gap is reported when the best ratio is <= min_ratio.
// Throws kInvalidInput for fewer than two values, negative values, or an
// unsorted spectrum.
GapResult spectral_gap_index(std::span<const double> spectrum,
                             double min_ratio = kDefaultGapRatio);

}  // namespace tcfg::analysis
