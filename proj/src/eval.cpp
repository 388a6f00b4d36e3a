#include "tcfg/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "tcfg/dataset.hpp"
#include "tcfg/error.hpp"
#include "tcfg/io.hpp"
#include "tcfg/linalg.hpp"

namespace tcfg::eval {
namespace {

double median_of(Vector v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Moments {
  double mean[2] = {0.0, 0.0};
  Matrix cov{{0.0, 0.0}, {0.0, 0.0}};
};

Moments fit(std::span<const Vector> s) {
  Moments m;
  const double n = static_cast<double>(s.size());
  for (const auto& p : s) {
    if (p.size() != 2) throw Error(ErrorKind::kDimensionMismatch, "frechet: samples must be 2-D");
    m.mean[0] += p[0] / n;
    m.mean[1] += p[1] / n;
  }
  for (const auto& p : s) {
    const double dx = p[0] - m.mean[0];
    const double dy = p[1] - m.mean[1];
    m.cov(0, 0) += dx * dx;
    m.cov(0, 1) += dx * dy;
    m.cov(1, 1) += dy * dy;
  }
  m.cov(0, 0) /= n - 1.0;
  m.cov(1, 1) /= n - 1.0;
  m.cov(0, 1) /= n - 1.0;
  m.cov(1, 0) = m.cov(0, 1);
  return m;
}

bool regularize(Matrix& cov) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  const double tr = cov(0, 0) + cov(1, 1);
  if (det > 1e-14 * std::max(tr * tr, 1e-300)) return false;
  cov(0, 0) += 1e-10;
  cov(1, 1) += 1e-10;
  return true;
}

using Clock = std::chrono::steady_clock;

}  // namespace

DistanceStats mean_manifold_distance(std::span<const Vector> samples) {
  if (samples.empty()) throw Error(ErrorKind::kEmptyInput, "manifold distance: no samples");
  Vector d;
  d.reserve(samples.size());
  for (const auto& s : samples) d.push_back(dataset::project_to_moons(s).nearest.distance);
  // Sorted summation keeps the mean independent of sample order.
  std::sort(d.begin(), d.end());
  double total = 0.0;
  for (double x : d) total += x;
  return {total / static_cast<double>(d.size()), median_of(d)};
}

FrechetResult frechet_gaussian_2d(std::span<const Vector> a, std::span<const Vector> b) {
  if (a.size() < 3 || b.size() < 3) throw Error(ErrorKind::kInvalidInput, "frechet: need >= 3 samples per set");
  Moments ma = fit(a);
  Moments mb = fit(b);
  FrechetResult r;
  r.regularized = regularize(ma.cov);
  r.regularized = regularize(mb.cov) || r.regularized;

  const double dx = ma.mean[0] - mb.mean[0];
  const double dy = ma.mean[1] - mb.mean[1];
  const Matrix root_a = linalg::spd_sqrt_2x2(ma.cov);
  Matrix inner = root_a * mb.cov * root_a;
  const double off = 0.5 * (inner(0, 1) + inner(1, 0));
  inner(0, 1) = inner(1, 0) = off;
  const Matrix cross = linalg::spd_sqrt_2x2(inner);
  const double trace = ma.cov(0, 0) + ma.cov(1, 1) + mb.cov(0, 0) + mb.cov(1, 1) -
                       2.0 * (cross(0, 0) + cross(1, 1));
  r.value = std::max(0.0, dx * dx + dy * dy + trace);
  return r;
}

std::vector<ModeResult> compare_modes(const sampler::ScoreSource& source, const NoiseSchedule& sched,
                                      std::span<const Vector> reference, const CompareOptions& options) {
  if (options.samples_per_mode < 2) throw Error(ErrorKind::kInvalidInput, "compare: need >= 2 samples per mode");
  std::vector<ModeResult> results;
  for (guidance::Mode mode : options.modes) {
    ModeResult r;
    r.mode = mode;
    r.seed = options.seed;
    for (int label = 0; label < 2; ++label) {
      sampler::SampleOptions so;
      so.guidance = {mode, options.scale, options.tie_tolerance};
      so.label = label;
      so.n = label == 0 ? (options.samples_per_mode + 1) / 2 : options.samples_per_mode / 2;
      so.seed = options.seed * 2 + static_cast<std::uint64_t>(label);
      so.noise_on = options.noise_on;
      auto out = sampler::sample(source, sched, so);
      for (auto& s : out.samples) {
        r.samples.push_back(std::move(s));
        r.labels.push_back(label);
      }
    }
    r.sample_count = r.samples.size();
    r.distance = mean_manifold_distance(r.samples);
    r.frechet = frechet_gaussian_2d(r.samples, reference);
    results.push_back(std::move(r));
  }
  return results;
}

BenchReport bench_overhead(const sampler::ScoreSource& source, const NoiseSchedule& sched,
                           std::size_t n, std::uint64_t seed, int repeats, double scale) {
  if (n == 0 || repeats <= 0) throw Error(ErrorKind::kInvalidInput, "bench: need n > 0 and repeats > 0");
  const std::size_t d = source.dim();
  const int T = sched.steps();
  Vector cfg_steps, tcfg_steps, cfg_guide, tcfg_guide;

  // Both modes advance in lockstep, alternating which goes first each step,
  // so clock drift and cache state hit them evenly.
  struct Lane {
    guidance::GuidanceConfig gc;
    Vector* step_times;
    Vector* guide_times;
    std::vector<Rng> streams;
    std::vector<Vector> z;
    std::vector<guidance::ScorePair> pairs;
  };
  auto advance = [&](Lane& lane, int t) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < n; ++i) {
      lane.pairs[i].uncond = source.eps(lane.z[i], t, 2);
      lane.pairs[i].cond = source.eps(lane.z[i], t, 0);
    }
    const auto t1 = Clock::now();
    const std::vector<Vector> guided = guidance::guide(lane.pairs, lane.gc);
    const auto t2 = Clock::now();
    for (std::size_t i = 0; i < n; ++i) lane.z[i] = sampler::ddpm_step(lane.z[i], guided[i], t, sched, lane.streams[i]);
    const auto t3 = Clock::now();
    lane.step_times->push_back(std::chrono::duration<double>(t3 - t0).count());
    lane.guide_times->push_back(std::chrono::duration<double>(t2 - t1).count());
  };

  for (int r = 0; r < repeats; ++r) {
    Lane lanes[2] = {{{guidance::Mode::kCfg, scale}, &cfg_steps, &cfg_guide, {}, {}, {}},
                     {{guidance::Mode::kTcfg, scale}, &tcfg_steps, &tcfg_guide, {}, {}, {}}};
    for (Lane& lane : lanes) {
      lane.z.assign(n, Vector(d));
      lane.pairs.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        lane.streams.push_back(make_stream(seed, i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& x : lane.z[i]) x = gauss(lane.streams.back());
      }
    }
    for (int t = T; t >= 1; --t) {
      const int first = (t + r) % 2;
      advance(lanes[first], t);
      advance(lanes[1 - first], t);
    }
  }
  BenchReport rep;
  rep.samples = n;
  rep.steps = T;
  rep.repeats = repeats;
  rep.cfg_step_median = median_of(cfg_steps);
  rep.tcfg_step_median = median_of(tcfg_steps);
  rep.overhead_fraction = (rep.tcfg_step_median - rep.cfg_step_median) / rep.cfg_step_median;
  rep.cfg_guidance_median = median_of(cfg_guide);
  rep.tcfg_guidance_median = median_of(tcfg_guide);
  return rep;
}

std::string to_json(const EvalReport& r) {
  nlohmann::json seeds = nlohmann::json::array();
  for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
    nlohmann::json modes = nlohmann::json::object();
    for (const auto& m : r.per_seed[s]) {
      modes[std::string(guidance::to_string(m.mode))] = {
          {"mean_distance", m.distance.mean},
          {"median_distance", m.distance.median},
          {"frechet", m.frechet.value},
          {"frechet_regularized", m.frechet.regularized},
          {"sample_count", m.sample_count}};
    }
    seeds.push_back({{"seed", r.seeds.at(s)}, {"modes", modes}});
  }
  nlohmann::json j;
  j["runs"] = seeds;
  return j.dump(1) + "\n";
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "seed,mode,n,mean_distance,median_distance,frechet,regularized\n";
  for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
    for (const auto& m : r.per_seed[s]) {
      out << r.seeds.at(s) << ',' << guidance::to_string(m.mode) << ',' << m.sample_count << ','
          << io::format_double(m.distance.mean) << ',' << io::format_double(m.distance.median) << ','
          << io::format_double(m.frechet.value) << ',' << (m.frechet.regularized ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string to_json(const BenchReport& r) {
  nlohmann::json j;
  j["samples"] = r.samples;
  j["steps"] = r.steps;
  j["repeats"] = r.repeats;
  j["cfg_step_median_s"] = r.cfg_step_median;
  j["tcfg_step_median_s"] = r.tcfg_step_median;
  j["overhead_fraction"] = r.overhead_fraction;
  j["cfg_guidance_median_s"] = r.cfg_guidance_median;
  j["tcfg_guidance_median_s"] = r.tcfg_guidance_median;
  return j.dump(1) + "\n";
}

}  // namespace tcfg::eval
