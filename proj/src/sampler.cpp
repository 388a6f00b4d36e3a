#include "tcfg/sampler.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tcfg/error.hpp"
#include "tcfg/io.hpp"

namespace tcfg::sampler {
namespace {

void check_label(int label) {
  if (label < 0 || label > model::kNullLabel) {
    throw Error(ErrorKind::kInvalidLabel, "label must be 0, 1 or 2 (null)");
  }
}

// Posterior-weighted eps over the rows of `points`.
Vector posterior_eps(const Matrix& points, std::span<const double> z, int t,
                     const NoiseSchedule& sched) {
  if (t == 0) throw Error(ErrorKind::kInvalidStep, "analytic eps undefined at t = 0");
  const double abar = sched.alpha_bar(t);
  const double a = std::sqrt(abar);
  const double var = 1.0 - abar;
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (z.size() != d) throw Error(ErrorKind::kDimensionMismatch, "analytic eps: wrong dimension");

  Vector logw(n);
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    auto x = points.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = z[j] - a * x[j];
      d2 += r * r;
    }
    logw[i] = -d2 / (2.0 * var);
    max_logw = std::max(max_logw, logw[i]);
  }
  Vector mean(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(logw[i] - max_logw);
    total += w;
    auto x = points.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += w * x[j];
  }
  const double s = std::sqrt(var);
  Vector eps(d);
  for (std::size_t j = 0; j < d; ++j) eps[j] = (z[j] - a * mean[j] / total) / s;
  return eps;
}

Matrix select_rows(std::span<const dataset::LabeledPoint> data, int label) {
  std::size_t count = 0;
  for (const auto& p : data)
    if (label == model::kNullLabel || p.label == label) ++count;
  if (count == 0) {
    throw Error(ErrorKind::kEmptyInput, "analytic eps: no data points with label " + std::to_string(label));
  }
  Matrix m(count, data.front().position.size());
  std::size_t r = 0;
  for (const auto& p : data) {
    if (label != model::kNullLabel && p.label != label) continue;
    if (p.position.size() != m.cols()) throw Error(ErrorKind::kDimensionMismatch, "analytic eps: ragged data");
    std::copy(p.position.begin(), p.position.end(), m.row(r++).begin());
  }
  return m;
}

}  // namespace

Vector analytic_eps(std::span<const dataset::LabeledPoint> data, std::span<const double> z, int t,
                    int label, const NoiseSchedule& sched) {
  check_label(label);
  if (data.empty()) throw Error(ErrorKind::kEmptyInput, "analytic eps: empty data");
  return posterior_eps(select_rows(data, label), z, t, sched);
}

AnalyticSource::AnalyticSource(std::vector<dataset::LabeledPoint> data, const NoiseSchedule& sched)
    : data_(std::move(data)), sched_(sched) {
  if (data_.empty()) throw Error(ErrorKind::kEmptyInput, "analytic source: empty data");
  dim_ = data_.front().position.size();
  by_label_[model::kNullLabel] = select_rows(data_, model::kNullLabel);
  for (int label = 0; label < 2; ++label) {
    bool present = false;
    for (const auto& p : data_) present = present || p.label == label;
    if (present) by_label_[label] = select_rows(data_, label);
  }
}

Vector AnalyticSource::eps(std::span<const double> z, int t, int label) const {
  check_label(label);
  const Matrix& pts = by_label_[label];
  if (pts.empty()) {
    throw Error(ErrorKind::kEmptyInput, "analytic eps: no data points with label " + std::to_string(label));
  }
  return posterior_eps(pts, z, t, sched_);
}

Vector ddpm_step(std::span<const double> z_t, std::span<const double> eps_hat, int t,
                 const NoiseSchedule& sched, Rng& rng, bool noise_on) {
  if (z_t.size() != eps_hat.size()) throw Error(ErrorKind::kDimensionMismatch, "ddpm_step: size mismatch");
  const double beta = sched.beta(t);
  const double coef = beta / std::sqrt(1.0 - sched.alpha_bar(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
  Vector out(z_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (z_t[i] - coef * eps_hat[i]) * inv_sqrt_alpha;
  if (noise_on && t > 1) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma = std::sqrt(beta);
    for (double& x : out) x += sigma * gauss(rng);
  }
  return out;
}

std::size_t Trajectory::slot(int t) const {
  const int T = steps();
  if (t < 1 || t > T) throw Error(ErrorKind::kInvalidStep, "trajectory: step out of range");
  return static_cast<std::size_t>(T - t);
}

SampleResult sample(const ScoreSource& source, const NoiseSchedule& sched,
                    const SampleOptions& options) {
  if (options.label != 0 && options.label != 1) {
    throw Error(ErrorKind::kInvalidLabel, "sample: label must be 0 or 1");
  }
  if (options.n == 0) throw Error(ErrorKind::kEmptyInput, "sample: n must be > 0");
  const std::size_t d = source.dim();
  const int T = sched.steps();

  std::vector<Rng> streams;
  std::vector<Vector> z(options.n, Vector(d));
  streams.reserve(options.n);
  for (std::size_t i = 0; i < options.n; ++i) {
    streams.push_back(make_stream(options.seed, i));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : z[i]) x = gauss(streams.back());
  }

  SampleResult result;
  if (options.record) {
    result.trajectories.resize(options.n);
    for (std::size_t i = 0; i < options.n; ++i) {
      Trajectory& tr = result.trajectories[i];
      tr.label = options.label;
      tr.seed = options.seed;
      tr.index = i;
      tr.states.reserve(static_cast<std::size_t>(T) + 1);
      tr.states.push_back(z[i]);
    }
  }

  std::vector<guidance::ScorePair> pairs(options.n);
  for (int t = T; t >= 1; --t) {
    for (std::size_t i = 0; i < options.n; ++i) {
      pairs[i].uncond = source.eps(z[i], t, model::kNullLabel);
      pairs[i].cond = source.eps(z[i], t, options.label);
    }
    const std::vector<Vector> guided = guidance::guide(pairs, options.guidance);
    for (std::size_t i = 0; i < options.n; ++i) {
      if (options.record) {
        Trajectory& tr = result.trajectories[i];
        tr.uncond_scores.push_back(eps_to_score(pairs[i].uncond, t, sched));
        tr.cond_scores.push_back(eps_to_score(pairs[i].cond, t, sched));
        tr.guided_scores.push_back(eps_to_score(guided[i], t, sched));
      }
      z[i] = ddpm_step(z[i], guided[i], t, sched, streams[i], options.noise_on);
      if (!all_finite(z[i])) throw Error(ErrorKind::kInvalidInput, "sample: chain diverged");
      if (options.record) result.trajectories[i].states.push_back(z[i]);
    }
  }
  result.samples = std::move(z);
  return result;
}

std::string samples_csv(std::span<const Vector> samples, int label, guidance::Mode mode,
                        std::uint64_t seed) {
  std::ostringstream out;
  out << "x0,x1,label,mode,seed\n";
  for (const auto& s : samples) {
    out << io::format_double(s.at(0)) << ',' << io::format_double(s.size() > 1 ? s[1] : 0.0) << ','
        << label << ',' << guidance::to_string(mode) << ',' << seed << '\n';
  }
  return out.str();
}

std::string trajectories_json(std::span<const Trajectory> trajectories, guidance::Mode mode) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& tr : trajectories) {
    arr.push_back({{"label", tr.label},
                   {"seed", tr.seed},
                   {"index", tr.index},
                   {"mode", guidance::to_string(mode)},
                   {"states", tr.states},
                   {"uncond_scores", tr.uncond_scores},
                   {"cond_scores", tr.cond_scores},
                   {"guided_scores", tr.guided_scores}});
  }
  return arr.dump() + "\n";
}

}  // namespace tcfg::sampler
