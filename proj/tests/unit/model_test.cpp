#include <doctest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "../oracles.hpp"
#include "tcfg/error.hpp"
#include "tcfg/model.hpp"

using namespace tcfg;
using namespace tcfg::model;

namespace {

std::vector<Example> random_probes(std::size_t n, std::mt19937_64& rng, int steps = 100) {
  std::uniform_int_distribution<int> t(1, steps), label(0, 2);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({oracle::random_vector(2, rng), t(rng), label(rng), oracle::random_vector(2, rng)});
  }
  return out;
}

// Central differences of the batch loss, computed here rather than through
// grad_check; compared by per-block norms.
double fd_block_error(const ScoreModel& m, const std::vector<Example>& probes) {
  Vector analytic;
  loss_and_gradient(m, probes, &analytic);
  ScoreModel work = m;
  auto p = work.params();
  const double h = 1e-5;
  Vector numeric(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = loss_and_gradient(work, probes, nullptr);
    p[i] = keep - h;
    const double down = loss_and_gradient(work, probes, nullptr);
    p[i] = keep;
    numeric[i] = (up - down) / (2 * h);
  }
  const auto& l = m.layout();
  const std::size_t b[] = {l.w1, l.b1, l.w2, l.b2, l.labels, l.total};
  double worst = 0;
  for (int k = 0; k < 5; ++k) {
    Vector a(analytic.begin() + b[k], analytic.begin() + b[k + 1]);
    Vector n(numeric.begin() + b[k], numeric.begin() + b[k + 1]);
    const double denom = std::max(oracle::vnorm(a), oracle::vnorm(n));
    if (denom > 0) worst = std::max(worst, oracle::vnorm(subtract(a, n)) / denom);
  }
  return worst;
}

ModelConfig small_config(Activation act = Activation::kSilu) {
  ModelConfig c;
  c.hidden = 16;
  c.activation = act;
  return c;
}

}  // namespace

TEST_CASE("zero-initialized output layer predicts zero") {
  const ScoreModel m(ModelConfig{}, 1);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vector e = m.forward(oracle::random_vector(2, rng), 1 + i * 4, i % 3);
    CHECK(e == Vector{0, 0});
  }
}

TEST_CASE("forward is deterministic and validates labels") {
  ScoreModel m(ModelConfig{}, 2);
  Rng rng(3);
  m.randomize(rng, 0.3);
  const Vector z{0.1, -0.4};
  CHECK(m.forward(z, 7, 1) == m.forward(z, 7, 1));
  CHECK(m.forward(z, 7, 1) != m.forward(z, 7, 0));
  CHECK_THROWS_AS(m.forward(z, 7, 3), Error);
  CHECK_THROWS_AS(m.forward(z, 7, -1), Error);
  CHECK_THROWS_AS(m.forward(Vector{1, 2, 3}, 7, 0), Error);
  try {
    m.forward(z, 7, 5);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidLabel);
  }
}

TEST_CASE("parameter layout") {
  const ModelConfig c;
  const ParamLayout l(c);
  CHECK(c.input_dim() == 2 + 16 + 8);
  CHECK(l.total == 128 * 26 + 128 + 2 * 128 + 2 + 3 * 8);
  const ScoreModel m(c, 0);
  CHECK(m.params().size() == l.total);
}

TEST_CASE("time embedding") {
  const Vector e = time_embedding(10, 8);
  CHECK(e.size() == 16);
  for (double x : e) CHECK(std::fabs(x) <= 1.0);
  CHECK(time_embedding(10, 8) != time_embedding(11, 8));
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    ScoreModel m(small_config(), 100 + trial);
    Rng r(trial);
    m.randomize(r, 0.5);
    const auto probes = random_probes(6, rng);
    const double err = fd_block_error(m, probes);
    CHECK(err <= 1e-5);
    CHECK(grad_check(m, probes) <= 1e-5);
  }
}

TEST_CASE("identity activation gradients are exact to roundoff") {
  std::mt19937_64 rng(5);
  ScoreModel m(small_config(Activation::kIdentity), 7);
  Rng r(7);
  m.randomize(r, 0.5);
  CHECK(grad_check(m, random_probes(4, rng)) <= 1e-9);
}

TEST_CASE("zero input gives finite gradients") {
  ScoreModel m(small_config(), 8);
  Rng r(8);
  m.randomize(r, 0.5);
  const std::vector<Example> probes{{Vector{0, 0}, 1, 0, Vector{0, 0}}};
  Vector g;
  loss_and_gradient(m, probes, &g);
  CHECK(all_finite(g));
  CHECK_THROWS_AS(loss_and_gradient(m, std::vector<Example>{}, &g), Error);
}

TEST_CASE("first batch loss is about the data dimension") {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  ScoreModel m(ModelConfig{}, 9);
  const auto data = dataset::two_moons({256, 0.05, 9});
  Trainer tr(m);
  TrainConfig cfg;
  Rng rng(10);
  const double loss = train_step(tr, data, sched, cfg, rng);
  // mean of a chi-square with 2 dof over 256 items: sd = 2 / 16.
  CHECK(std::fabs(loss - 2.0) < 4 * 0.125);
  CHECK_THROWS_AS(train_step(tr, std::span<const dataset::LabeledPoint>{}, sched, cfg, rng), Error);
}

TEST_CASE("zero gradient leaves Adam parameters unchanged") {
  Vector p{1.0, -2.0, 3.0};
  const Vector before = p;
  Adam adam(3);
  for (int i = 0; i < 5; ++i) adam.step(p, Vector{0, 0, 0}, TrainConfig{});
  CHECK(p == before);
}

TEST_CASE("overfitting one fixed batch") {
  std::mt19937_64 rng(11);
  ScoreModel m(ModelConfig{}, 11);
  const auto batch = random_probes(32, rng);
  Adam adam(m.params().size());
  TrainConfig cfg;
  Vector g;
  const double first = loss_and_gradient(m, batch, &g);
  double last = first;
  for (int i = 0; i < 200; ++i) {
    last = loss_and_gradient(m, batch, &g);
    adam.step(m.params(), g, cfg);
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("label dropping controls which embedding rows move") {
  const auto sched = linear_beta_schedule(20, 1e-4, 0.02);
  const auto data = dataset::two_moons({64, 0.05, 12});
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.batch_size = 16;
  for (double drop : {0.0, 1.0}) {
    ScoreModel m(small_config(), 13);
    const Vector before(m.params().begin(), m.params().end());
    cfg.label_drop_prob = drop;
    train(m, data, sched, cfg);
    const auto rows_changed = [&](int label) {
      const auto now = m.label_embedding(label);
      const std::size_t off = m.layout().labels + static_cast<std::size_t>(label) * m.config().label_dim;
      for (std::size_t k = 0; k < now.size(); ++k)
        if (now[k] != before[off + k]) return true;
      return false;
    };
    if (drop == 0.0) {
      CHECK(rows_changed(0));
      CHECK(rows_changed(1));
      CHECK_FALSE(rows_changed(kNullLabel));
    } else {
      CHECK_FALSE(rows_changed(0));
      CHECK_FALSE(rows_changed(1));
      CHECK(rows_changed(kNullLabel));
    }
  }
}

TEST_CASE("training is deterministic per seed") {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  const auto data = dataset::two_moons({200, 0.05, 14});
  TrainConfig cfg;
  cfg.iterations = 30;
  cfg.batch_size = 32;
  cfg.seed = 99;
  ScoreModel a(small_config(), 15), b(small_config(), 15);
  const auto ha = train(a, data, sched, cfg);
  const auto hb = train(b, data, sched, cfg);
  CHECK(ha.loss_history.size() == 30);
  CHECK(ha.loss_history == hb.loss_history);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(train(a, data, sched, cfg), Error);
}

// Monte Carlo estimate of the smallest achievable eps loss under the moons
// distribution (uniform angle, isotropic Gaussian jitter of std `noise`),
// using the exact posterior mean over a fine angle grid, with label dropout
// folded in.
double bayes_floor(double noise, const NoiseSchedule& sched, int draws, double drop) {
  constexpr int kGrid = 1000;
  const double pi = std::acos(-1.0);
  std::vector<std::array<double, 2>> centers[2];
  for (int k = 0; k < kGrid; ++k) {
    const double th = (k + 0.5) * pi / kGrid;
    centers[0].push_back({std::cos(th), std::sin(th)});
    centers[1].push_back({1.0 - std::cos(th), 0.5 - std::sin(th)});
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> angle(0.0, pi);
  std::uniform_int_distribution<int> step(1, sched.steps()), arc(0, 1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution dropped(drop);
  std::vector<double> logw;
  double total = 0.0;
  for (int k = 0; k < draws; ++k) {
    const int y = arc(rng);
    const double th = angle(rng);
    const double x0 = (y == 0 ? std::cos(th) : 1.0 - std::cos(th)) + noise * g(rng);
    const double x1 = (y == 0 ? std::sin(th) : 0.5 - std::sin(th)) + noise * g(rng);
    const int t = step(rng);
    const double ab = sched.alpha_bar(t);
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    const double e0 = g(rng), e1 = g(rng);
    const double z0 = sa * x0 + sb * e0, z1 = sa * x1 + sb * e1;
    // z | center c ~ N(sa c, var I); x0 | z, c has mean c + gain (z - sa c).
    const double var = ab * noise * noise + 1.0 - ab;
    const double gain = sa * noise * noise / var;
    logw.clear();
    std::vector<const std::array<double, 2>*> used;
    const bool null = dropped(rng);
    for (int a = 0; a < 2; ++a) {
      if (!null && a != y) continue;
      for (const auto& c : centers[a]) used.push_back(&c);
    }
    double top = -1e300;
    for (const auto* c : used) {
      const double d0 = z0 - sa * (*c)[0], d1 = z1 - sa * (*c)[1];
      logw.push_back(-(d0 * d0 + d1 * d1) / (2.0 * var));
      top = std::max(top, logw.back());
    }
    double wsum = 0.0, m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < used.size(); ++i) {
      const double w = std::exp(logw[i] - top);
      const auto& c = *used[i];
      wsum += w;
      m0 += w * (c[0] + gain * (z0 - sa * c[0]));
      m1 += w * (c[1] + gain * (z1 - sa * c[1]));
    }
    const double r0 = e0 - (z0 - sa * m0 / wsum) / sb, r1 = e1 - (z1 - sa * m1 / wsum) / sb;
    total += r0 * r0 + r1 * r1;
  }
  return total / draws;
}

TEST_CASE("default training makes progress on two moons") {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  const auto data = dataset::two_moons({2000, 0.05, 16});
  ScoreModel m(ModelConfig{}, 17);
  TrainConfig cfg;
  cfg.seed = 18;
  const auto hist = train(m, data, sched, cfg).loss_history;
  REQUIRE(hist.size() == 5000);
  const double lead = std::accumulate(hist.begin(), hist.begin() + 500, 0.0) / 500;
  const double trail = std::accumulate(hist.end() - 500, hist.end(), 0.0) / 500;
  // Most of the loss is irreducible at small t, so measure progress above
  // the posterior-mean floor.
  const double floor = bayes_floor(0.05, sched, 20000, cfg.label_drop_prob);
  MESSAGE("lead ", lead, " trail ", trail, " floor ", floor);
  CHECK(floor < trail);
  CHECK(trail - floor < 0.5 * (lead - floor));
}

TEST_CASE("checkpoint roundtrip") {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  ScoreModel m(ModelConfig{}, 19);
  Rng r(19);
  m.randomize(r, 0.2);
  const auto path = std::filesystem::temp_directory_path() / "tcfg_ckpt_test.json";
  save_checkpoint(path, m, sched);
  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.schedule_hash == sched.hash());
  CHECK(ck.schedule_steps == 100);
  CHECK(ck.model.config() == m.config());
  CHECK(std::equal(m.params().begin(), m.params().end(), ck.model.params().begin()));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), Error);
}
