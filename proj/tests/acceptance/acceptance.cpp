// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../oracles.hpp"
#include "tcfg/analysis.hpp"
#include "tcfg/config.hpp"
#include "tcfg/eval.hpp"
#include "tcfg/guidance.hpp"
#include "tcfg/linalg.hpp"
#include "tcfg/model.hpp"
#include "tcfg/pipeline.hpp"
#include "tcfg/sampler.hpp"

using namespace tcfg;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vector matvec(const Matrix& r, const Vector& x) {
  Vector y(r.rows(), 0.0);
  for (std::size_t i = 0; i < r.rows(); ++i) y[i] = dot(r.row(i), x);
  return y;
}

double span_residual(const Vector& x, const Vector& a, const Vector& b) {
  const Vector e1 = scaled(a, 1.0 / norm(a));
  Vector e2 = axpy(b, -dot(b, e1), e1);
  Vector r = axpy(x, -dot(x, e1), e1);
  const double n2 = norm(e2);
  if (n2 > 1e-12 * norm(b)) {
    e2 = scaled(e2, 1.0 / n2);
    r = axpy(r, -dot(r, e2), e2);
  }
  return norm(r);
}

// Worst violation (relative to max(1, |uncond|)) of the invariant suite for
// one pair. `projected` is what the code under test produced for the pair.
double invariant_violation(const guidance::ScorePair& p, const Vector& projected, double c, const Matrix& rot) {
  const double scale = std::max(1.0, norm(p.uncond));
  double worst = 0;
  const Vector sc = guidance::tcfg_project({scaled(p.uncond, c), scaled(p.cond, c)});
  worst = std::max(worst, oracle::max_abs_diff(sc, scaled(projected, c)) / (c * scale));
  const Vector sr = guidance::tcfg_project({matvec(rot, p.uncond), matvec(rot, p.cond)});
  worst = std::max(worst, oracle::max_abs_diff(sr, matvec(rot, projected)) / scale);
  const auto sw = linalg::svd_two_row(p.cond, p.uncond);
  const Vector swapped = scaled(sw.right.row(0), dot(p.uncond, sw.right.row(0)));
  worst = std::max(worst, oracle::max_abs_diff(swapped, projected) / scale);
  worst = std::max(worst, (norm(projected) - norm(p.uncond)) / scale);
  worst = std::max(worst, span_residual(projected, p.uncond, p.cond) / scale);
  return worst;
}

Outcome svd_conformance() {
  std::mt19937_64 rng(101);
  double proj = 0, recon = 0;
  int count = 0;
  for (std::size_t d : {2u, 4u, 64u, 4096u}) {
    for (int i = 0; i < 250; ++i, ++count) {
      const Matrix a = oracle::random_matrix(2, d, rng);
      const auto fast = linalg::svd_two_row(a.row(0), a.row(1));
      const auto ref = oracle::hestenes(a);
      proj = std::max(proj, oracle::projector_gap(fast.right_vector(0), ref.v[0]));
      const double na = std::max(1.0, frobenius_norm(a));
      recon = std::max(recon, frobenius_norm(a - fast.reconstruct()) / na);
      Matrix ref_recon(2, d);
      for (int k = 0; k < 2; ++k)
        for (int r = 0; r < 2; ++r)
          for (std::size_t j = 0; j < d; ++j) ref_recon(r, j) += ref.w[k][r] * ref.s[k] * ref.v[k][j];
      recon = std::max(recon, frobenius_norm(a - ref_recon) / na);
    }
  }
  return {proj <= 1e-9 && recon <= 1e-10,
          std::to_string(count) + " matrices, max |v1v1^T - oracle|_F bound " + fmt("%.2e", proj) +
              ", max relative reconstruction error " + fmt("%.2e", recon)};
}

Outcome tcfg_invariants() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> uc(0.01, 100.0), uk(-10.0, 10.0);
  const std::size_t dims[] = {2, 3, 4, 8, 16, 32};
  std::vector<Matrix> rots;
  for (std::size_t d : dims) rots.push_back(oracle::random_orthogonal(d, rng));
  double worst = 0, parallel = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = i % 6, d = dims[k];
    const guidance::ScorePair p{oracle::random_vector(d, rng, uc(rng)), oracle::random_vector(d, rng, uc(rng))};
    worst = std::max(worst, invariant_violation(p, guidance::tcfg_project(p), uc(rng), rots[k]));
    const guidance::ScorePair par{p.uncond, scaled(p.uncond, uk(rng))};
    const double w = uk(rng);
    parallel = std::max(parallel, oracle::max_abs_diff(guidance::tcfg_combine(par, w), guidance::cfg_combine(par, w)) /
                                      std::max(1.0, norm(par.uncond) + norm(par.cond)));
  }
  return {worst <= 1e-9 && parallel <= 1e-9, "10000 pairs, worst invariant violation " + fmt("%.2e", worst) +
                                                 ", parallel-pair CFG gap " + fmt("%.2e", parallel)};
}

Outcome zeroed_vh_equivalence() {
  std::mt19937_64 rng(303);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t d = 2 + i % 31;
    const guidance::ScorePair p{oracle::random_vector(d, rng), oracle::random_vector(d, rng)};
    worst = std::max(worst, oracle::max_abs_diff(guidance::tcfg_project(p), oracle::zeroed_vh_projection(p.uncond, p.cond)));
  }
  return {worst <= 1e-9, "10000 pairs, max abs difference " + fmt("%.2e", worst)};
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> t(1, 100), label(0, 2);
  double worst = 0;
  for (int m = 0; m < 20; ++m) {
    model::ScoreModel net(model::ModelConfig{}, 1000 + m);
    Rng r(m);
    net.randomize(r, 0.3);
    std::vector<model::Example> probes;
    for (int i = 0; i < 8; ++i)
      probes.push_back({oracle::random_vector(2, rng), t(rng), label(rng), oracle::random_vector(2, rng)});
    worst = std::max(worst, model::grad_check(net, probes, 1e-5));
  }
  return {worst <= 1e-5, "20 models, max per-block relative error " + fmt("%.2e", worst)};
}

Outcome oracle_correctness() {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  const auto data = dataset::two_moons({200, 0.05, 505});
  std::vector<Vector> xs;
  for (const auto& p : data) xs.push_back(p.position);
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> pick_t(1, 100);
  std::uniform_int_distribution<std::size_t> pick_x(0, xs.size() - 1);
  std::uniform_int_distribution<int> pick_label(0, 2);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const int t = pick_t(rng);
    const int label = pick_label(rng);
    const double ab = sched.alpha_bar(t);
    const Vector z = forward_diffuse(xs[pick_x(rng)], t, oracle::random_vector(2, rng), sched);
    std::vector<Vector> subset;
    for (const auto& p : data)
      if (label == model::kNullLabel || p.label == label) subset.push_back(p.position);
    const Vector score = eps_to_score(sampler::analytic_eps(data, z, t, label, sched), t, sched);
    const Vector fd = oracle::gradient_fd(
        [&](const Vector& q) { return oracle::mixture_log_density(subset, q, ab); }, z, 1e-3 * std::sqrt(1 - ab));
    worst = std::max(worst, oracle::vnorm(subtract(score, fd)) / std::max(1.0, oracle::vnorm(fd)));
  }
  return {worst <= 1e-5, "100 (z, t) points, max relative error " + fmt("%.2e", worst)};
}

Outcome normal_dominance() {
  config::RunConfig cfg;
  cfg.data.noise_std = 0.0;
  cfg.sample.oracle = true;
  const NoiseSchedule sched = pipeline::make_schedule(cfg);
  const auto data = pipeline::make_data(cfg, cfg.run.seed);
  const sampler::AnalyticSource src(data, sched);
  sampler::SampleOptions o;
  o.guidance = cfg.guidance;
  o.n = cfg.analysis.trajectories;
  o.seed = 606;
  o.record = true;
  const auto res = sampler::sample(src, sched, o);
  const auto r = analysis::trajectory_ratios(res.trajectories);
  const int T = sched.steps();
  const double mid = r.uncond_median[static_cast<std::size_t>(T - T / 2)];
  const double quarter = r.uncond_median[static_cast<std::size_t>(T - T / 4)];
  const double one = r.uncond_median.back();
  return {one < 0.2 && one < mid, "median ratio at t=" + std::to_string(T / 2) + " " + fmt("%.3f", mid) + ", t=" +
                                      std::to_string(T / 4) + " " + fmt("%.3f", quarter) + ", t=1 " +
                                      fmt("%.4f", one)};
}

analysis::EmbeddedMoonsSetup embedded() {
  analysis::EmbeddedMoonsSetup s;
  s.ambient_dim = 10;
  s.n_scores = 2000;
  s.data_points = 6000;
  s.seed = 707;
  return s;
}

Outcome spectral_gap() {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  const analysis::EmbeddedMoons em(embedded(), sched);
  const int ts[] = {1, 5};
  const auto rep = analysis::spectrum_report([&](int t) { return em.scores(t); }, ts);
  std::string detail = "D=10, N=" + std::to_string(rep.n_samples);
  bool pass = true;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& g = rep.uncond_gap[k];
    detail += ", t=" + std::to_string(rep.timesteps[k]) + ": gap index " +
              (g.found ? std::to_string(g.retained) : std::string("none")) + " (ratio " + fmt("%.1f", g.ratio) + ")";
    if (rep.timesteps[k] == 5) pass = g.found && g.retained == 9;
  }
  return {pass, detail + "; criterion read at t=5"};
}

Outcome alignment() {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  const analysis::EmbeddedMoons em(embedded(), sched);
  const int ts[] = {10, 30, 50};
  const auto rep = analysis::alignment_report([&](int t) { return em.scores(t); }, ts);
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& g = rep.gap[k];
    const auto& v = rep.indexed[k].values;
    if (!g.found) {
      pass = false;
      detail += " t=" + std::to_string(rep.timesteps[k]) + ": no gap;";
      continue;
    }
    double head = 0, tail = 0;
    for (std::size_t i = 0; i < g.retained; ++i) head += v[i];
    for (std::size_t i = g.retained; i < v.size(); ++i) tail += v[i];
    head /= static_cast<double>(g.retained);
    tail /= static_cast<double>(v.size() - g.retained);
    pass = pass && head > tail;
    detail += " t=" + std::to_string(rep.timesteps[k]) + ": gap " + std::to_string(g.retained) + ", mean|cos| head " +
              fmt("%.6f", head) + " vs tail " + fmt("%.6f", tail) + ";";
  }
  return {pass, detail};
}

Outcome fig4_ordering() {
  config::RunConfig cfg;  // 5 seeds, w = 2, 500 samples per mode, default training settings
  const auto rep = pipeline::evaluate_report(cfg);
  int tcfg_le_cfg = 0, both_beat_cond = 0;
  std::string detail;
  for (std::size_t s = 0; s < rep.per_seed.size(); ++s) {
    double med[4] = {0, 0, 0, 0};
    for (const auto& m : rep.per_seed[s]) med[static_cast<int>(m.mode)] = m.distance.median;
    const double cond = med[0], cfgd = med[1], tcfgd = med[2];
    tcfg_le_cfg += tcfgd <= cfgd;
    both_beat_cond += cfgd < cond && tcfgd < cond;
    detail += " seed " + std::to_string(rep.seeds[s]) + " cond/cfg/tcfg/pooled " + fmt("%.4f", cond) + "/" +
              fmt("%.4f", cfgd) + "/" + fmt("%.4f", tcfgd) + "/" + fmt("%.4f", med[3]) + ";";
  }
  return {tcfg_le_cfg >= 3 && both_beat_cond >= 4, "TCFG<=CFG in " + std::to_string(tcfg_le_cfg) +
                                                       "/5, both beat CondOnly in " + std::to_string(both_beat_cond) +
                                                       "/5;" + detail};
}

Outcome degenerate_guidance() {
  const auto sched = linear_beta_schedule(100, 1e-4, 0.02);
  const sampler::AnalyticSource oracle_src(dataset::two_moons({500, 0.05, 808}), sched);
  model::ScoreModel net(model::ModelConfig{}, 809);
  Rng r(810);
  net.randomize(r, 0.2);
  const sampler::ModelSource model_src(net);
  bool identical = true;
  int compared = 0;
  for (const sampler::ScoreSource* src : {static_cast<const sampler::ScoreSource*>(&oracle_src),
                                          static_cast<const sampler::ScoreSource*>(&model_src)}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      sampler::SampleOptions o;
      o.n = 16;
      o.seed = seed;
      o.record = true;
      o.label = static_cast<int>(seed % 2);
      o.guidance.scale = 1.0;
      o.guidance.mode = guidance::Mode::kCondOnly;
      const auto ref = sampler::sample(*src, sched, o);
      for (auto m : {guidance::Mode::kCfg, guidance::Mode::kTcfg}) {
        o.guidance.mode = m;
        const auto got = sampler::sample(*src, sched, o);
        for (std::size_t i = 0; i < ref.trajectories.size(); ++i) {
          identical = identical && got.trajectories[i].states == ref.trajectories[i].states &&
                      got.trajectories[i].guided_scores == ref.trajectories[i].guided_scores;
          ++compared;
        }
      }
    }
  }

  // w = 0 TCFG: every recorded guided score is the projected unconditional score.
  sampler::SampleOptions o;
  o.n = 32;
  o.seed = 811;
  o.record = true;
  o.guidance.scale = 0.0;
  o.guidance.mode = guidance::Mode::kTcfg;
  const auto res = sampler::sample(oracle_src, sched, o);
  std::mt19937_64 rng(812);
  const Matrix rot = oracle::random_orthogonal(2, rng);
  double probe = 0, inv = 0;
  std::size_t steps = 0;
  for (const auto& tr : res.trajectories) {
    for (int k = 0; k < tr.steps(); ++k, ++steps) {
      const guidance::ScorePair p{tr.uncond_scores[k], tr.cond_scores[k]};
      const double scale = std::max(1.0, norm(p.uncond));
      probe = std::max(probe, oracle::max_abs_diff(tr.guided_scores[k], guidance::tcfg_project(p)) / scale);
      inv = std::max(inv, invariant_violation(p, tr.guided_scores[k], 3.7, rot));
    }
  }
  return {identical && probe <= 1e-9 && inv <= 1e-9,
          "w=1: " + std::to_string(compared) + " trajectories " + (identical ? "bitwise identical" : "DIFFER") +
              "; w=0: " + std::to_string(steps) + " steps, max |guided - s_hat| " + fmt("%.2e", probe) +
              ", worst invariant violation " + fmt("%.2e", inv)};
}

Outcome determinism() {
  config::RunConfig cfg;
  cfg.train.iterations = 300;
  cfg.sample.n = 64;
  cfg.sample.record = true;
  cfg.analysis.n_scores = 400;
  cfg.analysis.data_points = 2000;
  cfg.analysis.trajectories = 40;
  cfg.eval.seeds = 2;
  cfg.eval.samples_per_mode = 60;
  cfg.bench.samples = 16;
  cfg.bench.repeats = 1;
  cfg.run.seed = 909;
  const std::pair<const char*, pipeline::Artifacts (*)(const config::RunConfig&)> commands[] = {
      {"gen-data", pipeline::gen_data},
      {"train", pipeline::train},
      {"sample", pipeline::sample},
      {"analyze-spectrum", pipeline::analyze_spectrum},
      {"analyze-alignment", pipeline::analyze_alignment},
      {"analyze-trajectory", pipeline::analyze_trajectory},
      {"evaluate", pipeline::evaluate},
      {"bench", pipeline::bench},
      {"repro", pipeline::repro}};
  std::size_t files = 0, skipped = 0;
  std::string mismatched;
  for (const auto& [name, fn] : commands) {
    config::RunConfig again;
    config::apply_text(again, config::serialize(cfg));
    const auto a = fn(cfg);
    const auto b = fn(again);
    for (const auto& [file, contents] : a) {
      const bool data_file = file.ends_with(".csv") || file.ends_with(".json");
      if (!data_file) continue;
      if (pipeline::is_timing_artifact(file)) {
        ++skipped;
        continue;
      }
      ++files;
      if (!b.count(file) || b.at(file) != contents) mismatched += std::string(" ") + name + ":" + file;
    }
  }
  return {mismatched.empty(), std::to_string(files) + " CSV/JSON artifacts over 9 subcommands identical on rerun" +
                                  (mismatched.empty() ? "" : "; mismatched:" + mismatched) + "; " +
                                  std::to_string(skipped) + " wall-clock timing reports excluded"};
}

Outcome overhead() {
  const config::RunConfig cfg;
  const auto art = pipeline::bench(cfg);
  const auto j = nlohmann::json::parse(art.at("bench.json"));
  const auto field = [&](const char* key) -> double { return j.contains(key) ? j[key].get<double>() : NAN; };
  const double cfg_med = field("cfg_step_median_s"), tcfg_med = field("tcfg_step_median_s");
  const double frac = field("overhead_fraction");
  const bool produced = std::isfinite(cfg_med) && std::isfinite(tcfg_med) && std::isfinite(frac);
  return {produced && frac >= 0.0, "CFG " + fmt("%.3e", cfg_med) + " s/step, TCFG " + fmt("%.3e", tcfg_med) +
                                       " s/step, overhead fraction " + fmt("%.4f", frac) +
                                       " (large-model <0.01% figure is context only)"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"svd conformance", svd_conformance},
      {"tcfg invariant suite", tcfg_invariants},
      {"zeroed-Vh reference equivalence", zeroed_vh_equivalence},
      {"gradient correctness", gradient_correctness},
      {"analytic score oracle", oracle_correctness},
      {"normal dominance near the data", normal_dominance},
      {"spectral gap in R^10", spectral_gap},
      {"singular vector alignment", alignment},
      {"guidance ordering on trained model", fig4_ordering},
      {"degenerate guidance identities", degenerate_guidance},
      {"determinism", determinism},
      {"overhead benchmark", overhead},
  };
  const double limits[] = {10, 30, 0, 0, 0, 60, 120, 0, 600, 0, 0, 0};
  int failed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    const double limit = limits[index++];
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit > 0 && secs >= limit) {
      o.pass = false;
      o.detail += "; runtime over " + fmt("%.0f", limit) + " s";
    }
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
