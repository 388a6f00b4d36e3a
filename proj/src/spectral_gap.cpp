#include "tcfg/spectral_gap.hpp"

#include "tcfg/error.hpp"

namespace tcfg::analysis {

GapResult spectral_gap_index(std::span<const double> spectrum, double min_ratio) {
  if (spectrum.size() < 2) throw Error(ErrorKind::kInvalidInput, "spectral gap: need >= 2 values");
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (!(spectrum[i] >= 0.0)) throw Error(ErrorKind::kInvalidInput, "spectral gap: negative or NaN value");
    if (i > 0 && spectrum[i] > spectrum[i - 1]) {
      throw Error(ErrorKind::kInvalidInput, "spectral gap: spectrum is not sorted descending");
    }
  }
  GapResult best;
  for (std::size_t i = 0; i + 1 < spectrum.size(); ++i) {
    if (spectrum[i + 1] <= 0.0) break;
    const double r = spectrum[i] / spectrum[i + 1];
    if (r > best.ratio) {
      best.ratio = r;
      best.retained = i + 1;
    }
  }
  best.found = best.ratio > min_ratio;
  if (!best.found) best.retained = 0;
  return best;
}

}  // namespace tcfg::analysis
