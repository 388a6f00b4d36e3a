#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "tcfg/error.hpp"
#include "tcfg/eval.hpp"
#include "tcfg/sampler.hpp"

using namespace tcfg;
using namespace tcfg::sampler;

namespace {

const NoiseSchedule& sched() {
  static const NoiseSchedule s = linear_beta_schedule(100, 1e-4, 0.02);
  return s;
}

double median(Vector v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("analytic eps of a single point") {
  const std::vector<dataset::LabeledPoint> data{{{0.3, -0.2}, 0}};
  const Vector z{1.0, 0.5};
  for (int t : {1, 50, 100}) {
    const double ab = sched().alpha_bar(t);
    const Vector expected{(z[0] - std::sqrt(ab) * 0.3) / std::sqrt(1 - ab),
                          (z[1] - std::sqrt(ab) * -0.2) / std::sqrt(1 - ab)};
    CHECK(oracle::max_abs_diff(analytic_eps(data, z, t, 0, sched()), expected) < 1e-12);
    CHECK(oracle::max_abs_diff(analytic_eps(data, z, t, 2, sched()), expected) < 1e-12);
  }
}

TEST_CASE("analytic eps of two symmetric points at an equidistant z") {
  const std::vector<dataset::LabeledPoint> data{{{-1, 0}, 1}, {{1, 0}, 1}};
  const Vector z{0, 0.7};
  const int t = 30;
  const double ab = sched().alpha_bar(t);
  // Posterior mean is the midpoint (0, 0).
  const Vector expected = scaled(z, 1.0 / std::sqrt(1 - ab));
  CHECK(oracle::max_abs_diff(analytic_eps(data, z, t, 1, sched()), expected) < 1e-12);
}

TEST_CASE("analytic eps errors") {
  const std::vector<dataset::LabeledPoint> data{{{0, 0}, 0}};
  CHECK_THROWS_AS(analytic_eps(data, Vector{0, 0}, 5, 1, sched()), Error);
  CHECK_THROWS_AS(analytic_eps({}, Vector{0, 0}, 5, 2, sched()), Error);
  CHECK_THROWS_AS(analytic_eps(data, Vector{0, 0}, 0, 0, sched()), Error);
  CHECK_THROWS_AS(analytic_eps(data, Vector{0, 0}, 5, 3, sched()), Error);
}

TEST_CASE("analytic score matches the log-density gradient") {
  std::mt19937_64 rng(1);
  const auto data = dataset::two_moons({60, 0.05, 2});
  std::vector<Vector> xs;
  for (const auto& p : data) xs.push_back(p.position);
  std::uniform_int_distribution<int> pick_t(1, 100);
  std::uniform_int_distribution<std::size_t> pick_x(0, xs.size() - 1);
  for (int i = 0; i < 40; ++i) {
    const int t = pick_t(rng);
    const double ab = sched().alpha_bar(t);
    const Vector z = forward_diffuse(xs[pick_x(rng)], t, oracle::random_vector(2, rng), sched());
    const Vector score = eps_to_score(analytic_eps(data, z, t, 2, sched()), t, sched());
    const double h = 1e-3 * std::sqrt(1 - ab);
    const Vector fd = oracle::gradient_fd([&](const Vector& p) { return oracle::mixture_log_density(xs, p, ab); }, z, h);
    CHECK(oracle::vnorm(subtract(score, fd)) <= 1e-5 * std::max(1.0, oracle::vnorm(fd)));
  }
}

TEST_CASE("ddpm step formulas") {
  Rng rng(3);
  const Vector z{0.4, -1.0};
  const int t = 37;
  const Vector out = ddpm_step(z, Vector{0, 0}, t, sched(), rng, false);
  CHECK(out[0] == z[0] / std::sqrt(sched().alpha(t)));
  const Vector eps{0.2, 0.1};
  const Vector last = ddpm_step(z, eps, 1, sched(), rng, true);
  const double c = sched().beta(1) / std::sqrt(1 - sched().alpha_bar(1));
  CHECK(last[1] == doctest::Approx((z[1] - c * eps[1]) / std::sqrt(sched().alpha(1))).epsilon(1e-15));
  CHECK(ddpm_step(z, eps, 1, sched(), rng, true) == last);
  CHECK_THROWS_AS(ddpm_step(z, eps, 0, sched(), rng), Error);
  CHECK_THROWS_AS(ddpm_step(z, eps, 101, sched(), rng), Error);
}

TEST_CASE("sampling a single-point dataset contracts to the point") {
  const std::vector<dataset::LabeledPoint> data{{{0.5, 0.25}, 0}};
  const AnalyticSource src(data, sched());
  SampleOptions o;
  o.guidance.mode = guidance::Mode::kCondOnly;
  o.n = 200;
  o.seed = 4;
  o.record = true;
  const auto res = sample(src, sched(), o);
  double mean = 0;
  for (const auto& s : res.samples) mean += norm(subtract(s, data[0].position));
  CHECK(mean / res.samples.size() < 0.05);

  // Median distance shrinks over the last 20 steps. Single-step medians are
  // noisy, so compare every fifth step.
  double prev = 1e300;
  for (int t : {20, 15, 10, 5, 1}) {
    Vector d;
    for (const auto& tr : res.trajectories) d.push_back(norm(subtract(tr.states[tr.slot(t) + 1], data[0].position)));
    const double m = median(d);
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("sampling is deterministic and records trajectories") {
  const auto data = dataset::two_moons({200, 0.0, 5});
  const AnalyticSource src(data, sched());
  SampleOptions o;
  o.n = 8;
  o.seed = 6;
  o.record = true;
  const auto a = sample(src, sched(), o);
  const auto b = sample(src, sched(), o);
  CHECK(a.samples == b.samples);
  REQUIRE(a.trajectories.size() == 8);
  for (const auto& tr : a.trajectories) {
    CHECK(tr.states.size() == 101);
    CHECK(tr.steps() == 100);
    CHECK(tr.uncond_scores.size() == 100);
    CHECK(tr.cond_scores.size() == 100);
    CHECK(tr.guided_scores.size() == 100);
    CHECK(tr.states.back() == a.samples[tr.index]);
  }
  // Per-chain streams: a prefix of a larger run matches the smaller run.
  o.n = 12;
  o.record = false;
  const auto c = sample(src, sched(), o);
  for (std::size_t i = 0; i < 8; ++i) CHECK(c.samples[i] == a.samples[i]);
  CHECK(c.trajectories.empty());
}

TEST_CASE("unit guidance scale makes modes coincide") {
  const auto data = dataset::two_moons({200, 0.05, 7});
  const AnalyticSource src(data, sched());
  SampleOptions o;
  o.n = 16;
  o.seed = 8;
  o.guidance.scale = 1.0;
  o.guidance.mode = guidance::Mode::kCondOnly;
  const auto ref = sample(src, sched(), o).samples;
  for (auto m : {guidance::Mode::kCfg, guidance::Mode::kTcfg}) {
    o.guidance.mode = m;
    CHECK(sample(src, sched(), o).samples == ref);
  }
}

TEST_CASE("conditional oracle samples land on the outer arc") {
  const auto data = dataset::two_moons({2000, 0.0, 9});
  const AnalyticSource src(data, sched());
  SampleOptions o;
  o.guidance.mode = guidance::Mode::kCondOnly;
  o.label = 0;
  o.n = 500;
  o.seed = 10;
  const auto res = sample(src, sched(), o);
  int near = 0;
  for (const auto& s : res.samples) near += dataset::project_to_moons(s).per_arc[0].distance < 0.2;
  CHECK(near >= 475);
}

TEST_CASE("sample exports") {
  const std::vector<Vector> s{{0.5, 1.25}, {-1, 2}};
  const std::string csv = samples_csv(s, 1, guidance::Mode::kTcfg, 3);
  CHECK(csv == "x0,x1,label,mode,seed\n0.5,1.25,1,tcfg,3\n-1,2,1,tcfg,3\n");
}
