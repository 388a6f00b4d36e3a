#include "tcfg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tcfg/error.hpp"
#include "tcfg/io.hpp"
#include "tcfg/rng.hpp"

namespace tcfg::analysis {
namespace {

double median(Vector v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

nlohmann::json gap_json(const GapResult& g) {
  return {{"found", g.found}, {"retained", g.retained}, {"ratio", g.ratio}};
}

}  // namespace

ScoreMatrices score_matrices(std::span<const sampler::Trajectory> trajectories, int t) {
  if (trajectories.empty()) throw Error(ErrorKind::kEmptyInput, "score_matrices: no trajectories");
  const std::size_t d = trajectories.front().states.empty() ? 0 : trajectories.front().states.front().size();
  ScoreMatrices out{Matrix(trajectories.size(), d), Matrix(trajectories.size(), d)};
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& tr = trajectories[i];
    if (tr.uncond_scores.empty() || tr.cond_scores.size() != tr.uncond_scores.size()) {
      throw Error(ErrorKind::kInvalidInput, "score_matrices: trajectory was not recorded");
    }
    const std::size_t k = tr.slot(t);
    if (tr.uncond_scores[k].size() != d) throw Error(ErrorKind::kDimensionMismatch, "score_matrices: ragged");
    std::copy(tr.uncond_scores[k].begin(), tr.uncond_scores[k].end(), out.uncond.row(i).begin());
    std::copy(tr.cond_scores[k].begin(), tr.cond_scores[k].end(), out.cond.row(i).begin());
  }
  return out;
}

AlignmentCurve alignment_curves(const Matrix& right_uncond, const Matrix& right_cond,
                                AlignmentMode mode) {
  if (right_uncond.rows() != right_cond.rows() || right_uncond.cols() != right_cond.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "alignment: singular vector shapes differ");
  }
  const std::size_t k = right_cond.rows();
  AlignmentCurve out;
  out.values.reserve(k);
  out.matched.reserve(k);
  auto abs_cos = [&](std::size_t u, std::size_t c) {
    return std::abs(linalg::cosine_similarity(right_uncond.row(u), right_cond.row(c)));
  };
  if (mode == AlignmentMode::kIndexed) {
    for (std::size_t i = 0; i < k; ++i) {
      out.values.push_back(abs_cos(i, i));
      out.matched.push_back(i);
    }
    return out;
  }
  std::vector<bool> used(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t best = k;
    double best_val = -1.0;
    for (std::size_t u = 0; u < k; ++u) {
      if (used[u]) continue;
      const double v = abs_cos(u, c);
      if (v > best_val) {
        best_val = v;
        best = u;
      }
    }
    used[best] = true;
    out.values.push_back(best_val);
    out.matched.push_back(best);
  }
  return out;
}

double normal_tangent_ratio(std::span<const double> score, std::span<const double> point) {
  if (score.size() != 2) throw Error(ErrorKind::kDimensionMismatch, "normal_tangent_ratio: need 2-D score");
  const dataset::ManifoldProjection p = dataset::project_to_moons(point).nearest;
  const double tangential = std::abs(dot(score, p.tangent));
  const double normal = std::abs(dot(score, p.normal));
  if (normal == 0.0) return std::numeric_limits<double>::infinity();
  return tangential / normal;
}

EmbeddedMoons::EmbeddedMoons(const EmbeddedMoonsSetup& setup, const NoiseSchedule& sched)
    : setup_(setup),
      sched_(sched),
      embedding_(setup.ambient_dim, setup.seed ^ 0x5eedu),
      anchor_(embedding_.embed(dataset::moon_point(static_cast<dataset::Arc>(setup.anchor_label),
                                                   setup.anchor_angle))),
      source_(
          [&] {
            auto pts = dataset::two_moons({setup.data_points, 0.0, setup.seed});
            for (auto& p : pts) p.position = embedding_.embed(p.position);
            return pts;
          }(),
          sched) {
  if (setup.anchor_label != 0 && setup.anchor_label != 1) {
    throw Error(ErrorKind::kInvalidLabel, "embedded moons: anchor label must be 0 or 1");
  }
  if (setup.n_scores == 0) throw Error(ErrorKind::kEmptyInput, "embedded moons: n_scores must be > 0");
}

ScoreMatrices EmbeddedMoons::scores(int t) const {
  const std::size_t d = setup_.ambient_dim;
  Rng rng = make_stream(setup_.seed, static_cast<std::uint64_t>(t));
  std::normal_distribution<double> gauss(0.0, 1.0);
  ScoreMatrices out{Matrix(setup_.n_scores, d), Matrix(setup_.n_scores, d)};
  Vector eps(d);
  for (std::size_t i = 0; i < setup_.n_scores; ++i) {
    for (double& e : eps) e = gauss(rng);
    const Vector z = forward_diffuse(anchor_, t, eps, sched_);
    const Vector su = eps_to_score(source_.eps(z, t, model::kNullLabel), t, sched_);
    const Vector sc = eps_to_score(source_.eps(z, t, setup_.anchor_label), t, sched_);
    std::copy(su.begin(), su.end(), out.uncond.row(i).begin());
    std::copy(sc.begin(), sc.end(), out.cond.row(i).begin());
  }
  return out;
}

SpectrumReport spectrum_report(const ScoreProvider& provider, std::span<const int> timesteps,
                               double gap_ratio) {
  SpectrumReport r;
  for (int t : timesteps) {
    const ScoreMatrices m = provider(t);
    r.n_samples = m.uncond.rows();
    r.dim = m.uncond.cols();
    r.timesteps.push_back(t);
    r.uncond.push_back(linalg::svd_thin(m.uncond).singular_values);
    r.cond.push_back(linalg::svd_thin(m.cond).singular_values);
    r.uncond_gap.push_back(spectral_gap_index(r.uncond.back(), gap_ratio));
    r.cond_gap.push_back(spectral_gap_index(r.cond.back(), gap_ratio));
  }
  return r;
}

AlignmentReport alignment_report(const ScoreProvider& provider, std::span<const int> timesteps,
                                 double gap_ratio) {
  AlignmentReport r;
  for (int t : timesteps) {
    const ScoreMatrices m = provider(t);
    const linalg::SvdResult su = linalg::svd_thin(m.uncond);
    const linalg::SvdResult sc = linalg::svd_thin(m.cond);
    r.timesteps.push_back(t);
    r.indexed.push_back(alignment_curves(su.right, sc.right, AlignmentMode::kIndexed));
    r.greedy.push_back(alignment_curves(su.right, sc.right, AlignmentMode::kGreedy));
    r.gap.push_back(spectral_gap_index(su.singular_values, gap_ratio));
  }
  return r;
}

double alignment_margin(const AlignmentCurve& curve, std::size_t retained) {
  if (retained == 0 || retained >= curve.values.size()) {
    throw Error(ErrorKind::kInvalidInput, "alignment_margin: retained count leaves an empty side");
  }
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < retained; ++i) head += curve.values[i];
  for (std::size_t i = retained; i < curve.values.size(); ++i) tail += curve.values[i];
  return head / static_cast<double>(retained) -
         tail / static_cast<double>(curve.values.size() - retained);
}

std::string to_json(const SpectrumReport& r) {
  nlohmann::json j;
  j["n_samples"] = r.n_samples;
  j["dim"] = r.dim;
  j["timesteps"] = r.timesteps;
  j["uncond"] = r.uncond;
  j["cond"] = r.cond;
  nlohmann::json gu = nlohmann::json::array(), gc = nlohmann::json::array();
  for (const auto& g : r.uncond_gap) gu.push_back(gap_json(g));
  for (const auto& g : r.cond_gap) gc.push_back(gap_json(g));
  j["uncond_gap"] = gu;
  j["cond_gap"] = gc;
  return j.dump(1) + "\n";
}

std::string to_csv(const SpectrumReport& r) {
  std::ostringstream out;
  out << "timestep,kind,index,value\n";
  for (std::size_t k = 0; k < r.timesteps.size(); ++k) {
    for (std::size_t i = 0; i < r.uncond[k].size(); ++i)
      out << r.timesteps[k] << ",uncond," << i + 1 << ',' << io::format_double(r.uncond[k][i]) << '\n';
    for (std::size_t i = 0; i < r.cond[k].size(); ++i)
      out << r.timesteps[k] << ",cond," << i + 1 << ',' << io::format_double(r.cond[k][i]) << '\n';
  }
  return out.str();
}

std::string to_json(const AlignmentReport& r) {
  nlohmann::json j;
  j["timesteps"] = r.timesteps;
  nlohmann::json idx = nlohmann::json::array(), gr = nlohmann::json::array(), gaps = nlohmann::json::array();
  for (const auto& c : r.indexed) idx.push_back(c.values);
  for (const auto& c : r.greedy) gr.push_back({{"values", c.values}, {"matched", c.matched}});
  for (const auto& g : r.gap) gaps.push_back(gap_json(g));
  j["indexed"] = idx;
  j["greedy"] = gr;
  j["gap"] = gaps;
  return j.dump(1) + "\n";
}

std::string to_csv(const AlignmentReport& r) {
  std::ostringstream out;
  out << "timestep,mode,index,value\n";
  for (std::size_t k = 0; k < r.timesteps.size(); ++k) {
    for (std::size_t i = 0; i < r.indexed[k].values.size(); ++i)
      out << r.timesteps[k] << ",indexed," << i + 1 << ',' << io::format_double(r.indexed[k].values[i]) << '\n';
    for (std::size_t i = 0; i < r.greedy[k].values.size(); ++i)
      out << r.timesteps[k] << ",greedy," << i + 1 << ',' << io::format_double(r.greedy[k].values[i]) << '\n';
  }
  return out.str();
}

TrajectoryRatios trajectory_ratios(std::span<const sampler::Trajectory> trajectories) {
  if (trajectories.empty()) throw Error(ErrorKind::kEmptyInput, "trajectory_ratios: no trajectories");
  TrajectoryRatios out;
  const int T = trajectories.front().steps();
  for (int t = T; t >= 1; --t) {
    Vector ru, rc, rg;
    for (const auto& tr : trajectories) {
      const std::size_t k = tr.slot(t);
      const Vector& z = tr.states[k];
      try {
        ru.push_back(normal_tangent_ratio(tr.uncond_scores[k], z));
        rc.push_back(normal_tangent_ratio(tr.cond_scores[k], z));
        rg.push_back(normal_tangent_ratio(tr.guided_scores[k], z));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kAmbiguousProjection) throw;
      }
    }
    out.timesteps.push_back(t);
    out.uncond_median.push_back(median(std::move(ru)));
    out.cond_median.push_back(median(std::move(rc)));
    out.guided_median.push_back(median(std::move(rg)));
  }
  return out;
}

}  // namespace tcfg::analysis
