#include "tcfg/guidance.hpp"

#include "tcfg/error.hpp"
#include "tcfg/linalg.hpp"

namespace tcfg::guidance {
namespace {

void check_pair(const ScorePair& pair) {
  if (pair.uncond.size() != pair.cond.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "score pair: dimensions differ");
  }
  if (pair.uncond.empty()) throw Error(ErrorKind::kEmptyInput, "score pair: empty vectors");
}

Vector blend(std::span<const double> base, std::span<const double> cond, double w) {
  Vector out(base.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * base[i] + w * cond[i];
  return out;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kCondOnly: return "cond";
    case Mode::kCfg: return "cfg";
    case Mode::kTcfg: return "tcfg";
    case Mode::kPooledTcfg: return "tcfg-pooled";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "cond") return Mode::kCondOnly;
  if (name == "cfg") return Mode::kCfg;
  if (name == "tcfg") return Mode::kTcfg;
  if (name == "tcfg-pooled") return Mode::kPooledTcfg;
  throw Error(ErrorKind::kTypeMismatch, "unknown guidance mode '" + std::string(name) + "'");
}

Vector cfg_combine(const ScorePair& pair, double w) {
  check_pair(pair);
  return blend(pair.uncond, pair.cond, w);
}

Vector tcfg_project(const ScorePair& pair, double tie_tolerance) {
  check_pair(pair);
  if (pair.uncond.size() < 2) return pair.uncond;
  const linalg::SvdResult svd = linalg::svd_two_row(pair.uncond, pair.cond);
  const double s1 = svd.singular_values[0];
  const double s2 = svd.singular_values[1];
  if (s1 == 0.0 || s1 - s2 <= tie_tolerance * s1) return pair.uncond;
  auto v1 = svd.right.row(0);
  return scaled(v1, dot(pair.uncond, v1));
}

Vector tcfg_combine(const ScorePair& pair, double w, double tie_tolerance) {
  const Vector projected = tcfg_project(pair, tie_tolerance);
  return blend(projected, pair.cond, w);
}

std::vector<Vector> pooled_tcfg_project(std::span<const ScorePair> pairs, double gap_ratio) {
  if (pairs.empty()) throw Error(ErrorKind::kEmptyInput, "pooled tcfg: no score pairs");
  const std::size_t d = pairs.front().uncond.size();
  Matrix stacked(2 * pairs.size(), d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    check_pair(pairs[i]);
    if (pairs[i].uncond.size() != d) throw Error(ErrorKind::kDimensionMismatch, "pooled tcfg: dimensions differ");
    std::copy(pairs[i].uncond.begin(), pairs[i].uncond.end(), stacked.row(2 * i).begin());
    std::copy(pairs[i].cond.begin(), pairs[i].cond.end(), stacked.row(2 * i + 1).begin());
  }
  std::vector<Vector> out;
  out.reserve(pairs.size());
  if (d < 2) {
    for (const auto& p : pairs) out.push_back(p.uncond);
    return out;
  }
  const linalg::SvdResult svd = linalg::svd_thin(stacked);
  const analysis::GapResult gap = analysis::spectral_gap_index(svd.singular_values, gap_ratio);
  if (!gap.found) {
    for (const auto& p : pairs) out.push_back(p.uncond);
    return out;
  }
  for (const auto& p : pairs) {
    Vector proj(d, 0.0);
    for (std::size_t k = 0; k < gap.retained; ++k) {
      auto v = svd.right.row(k);
      const double c = dot(p.uncond, v);
      for (std::size_t j = 0; j < d; ++j) proj[j] += c * v[j];
    }
    out.push_back(std::move(proj));
  }
  return out;
}

std::vector<Vector> guide(std::span<const ScorePair> pairs, const GuidanceConfig& config) {
  std::vector<Vector> out;
  out.reserve(pairs.size());
  switch (config.mode) {
    case Mode::kCondOnly:
      for (const auto& p : pairs) {
        check_pair(p);
        out.push_back(p.cond);
      }
      break;
    case Mode::kCfg:
      for (const auto& p : pairs) out.push_back(cfg_combine(p, config.scale));
      break;
    case Mode::kTcfg:
      for (const auto& p : pairs) out.push_back(tcfg_combine(p, config.scale, config.tie_tolerance));
      break;
    case Mode::kPooledTcfg: {
      const std::vector<Vector> projected = pooled_tcfg_project(pairs, config.gap_ratio);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        out.push_back(blend(projected[i], pairs[i].cond, config.scale));
      }
      break;
    }
  }
  return out;
}

}  // namespace tcfg::guidance
