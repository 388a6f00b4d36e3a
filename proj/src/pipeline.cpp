#include "tcfg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tcfg/analysis.hpp"
#include "tcfg/error.hpp"
#include "tcfg/io.hpp"
#include "tcfg/plot.hpp"
#include "tcfg/rng.hpp"

namespace tcfg::pipeline {
namespace {

using config::RunConfig;

std::vector<Vector> positions(std::span<const dataset::LabeledPoint> data) {
  std::vector<Vector> out;
  out.reserve(data.size());
  for (const auto& p : data) out.push_back(p.position);
  return out;
}

plot::Series scatter_series(std::string label, std::span<const Vector> pts, std::string color = "") {
  plot::Series s;
  s.label = std::move(label);
  s.color = std::move(color);
  for (const Vector& p : pts) s.points.emplace_back(p[0], p[1]);
  return s;
}

std::vector<dataset::LabeledPoint> data_for_label(std::span<const dataset::LabeledPoint> data, int label) {
  std::vector<dataset::LabeledPoint> out;
  for (const auto& p : data) if (p.label == label) out.push_back(p);
  return out;
}

Artifacts prefixed(const std::string& dir, const Artifacts& a) {
  Artifacts out;
  for (const auto& [k, v] : a) out[dir + "/" + k] = v;
  return out;
}

void add_plot(Artifacts& out, const std::string& name, plot::PlotSpec spec) {
  out[name] = plot::render_svg(spec);
}

analysis::EmbeddedMoonsSetup embedded_setup(const RunConfig& cfg) {
  analysis::EmbeddedMoonsSetup s;
  s.ambient_dim = cfg.analysis.ambient_dim;
  s.data_points = cfg.analysis.data_points;
  s.n_scores = cfg.analysis.n_scores;
  s.anchor_label = cfg.analysis.anchor_label;
  s.anchor_angle = cfg.analysis.anchor_angle;
  s.seed = derive_seed(cfg.run.seed, kAnalysisSeed);
  return s;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return ss.str();
}

}  // namespace

NoiseSchedule make_schedule(const RunConfig& cfg) {
  return linear_beta_schedule(cfg.schedule.steps, cfg.schedule.beta_min, cfg.schedule.beta_max);
}

std::vector<dataset::LabeledPoint> make_data(const RunConfig& cfg, std::uint64_t seed) {
  return dataset::two_moons({cfg.data.n_samples, cfg.data.noise_std, derive_seed(seed, kDataSeed)});
}

TrainedModel train_model(const RunConfig& cfg, const NoiseSchedule& sched,
                         std::span<const dataset::LabeledPoint> data, std::uint64_t seed) {
  TrainedModel out{model::ScoreModel(cfg.model, derive_seed(seed, kInitSeed)), {}};
  model::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(seed, kTrainSeed);
  out.loss_history = model::train(out.model, data, sched, tc).loss_history;
  return out;
}

ScoreBackend make_backend(const RunConfig& cfg, const NoiseSchedule& sched,
                          std::span<const dataset::LabeledPoint> data, std::uint64_t seed) {
  ScoreBackend b;
  if (cfg.sample.oracle) {
    b.source = std::make_unique<sampler::AnalyticSource>(
        std::vector<dataset::LabeledPoint>(data.begin(), data.end()), sched);
    return b;
  }
  if (!cfg.sample.checkpoint.empty()) {
    model::Checkpoint ck = model::load_checkpoint(cfg.sample.checkpoint);
    if (ck.schedule_hash != sched.hash() || ck.schedule_steps != sched.steps()) {
      throw Error(ErrorKind::kInvalidSchedule, "checkpoint was trained with a different noise schedule");
    }
    b.model = std::make_unique<model::ScoreModel>(std::move(ck.model));
  } else {
    TrainedModel tm = train_model(cfg, sched, data, seed);
    b.model = std::make_unique<model::ScoreModel>(std::move(tm.model));
    b.loss_history = std::move(tm.loss_history);
  }
  b.source = std::make_unique<sampler::ModelSource>(*b.model);
  return b;
}

Artifacts gen_data(const RunConfig& cfg) {
  const auto data = make_data(cfg, cfg.run.seed);
  std::ostringstream csv;
  dataset::write_csv(csv, data);
  Artifacts out{{"data.csv", csv.str()}};
  plot::PlotSpec spec{plot::Kind::kScatter, "two moons", "x0", "x1", false, {}, {}};
  for (int label = 0; label < 2; ++label) {
    spec.series.push_back(scatter_series("label " + std::to_string(label), positions(data_for_label(data, label))));
  }
  add_plot(out, "data.svg", spec);
  return out;
}

Artifacts train(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  const auto data = make_data(cfg, cfg.run.seed);
  const TrainedModel tm = train_model(cfg, sched, data, cfg.run.seed);
  Artifacts out{{"checkpoint.json", model::checkpoint_json(tm.model, sched)}};
  std::string csv = "iteration,loss\n";
  plot::Series loss{"loss", {}, true, ""};
  for (std::size_t i = 0; i < tm.loss_history.size(); ++i) {
    csv += std::to_string(i + 1) + "," + io::format_double(tm.loss_history[i]) + "\n";
    loss.points.emplace_back(static_cast<double>(i + 1), tm.loss_history[i]);
  }
  out["loss.csv"] = csv;
  add_plot(out, "loss.svg", {plot::Kind::kMultiLine, "training loss", "iteration", "loss", true, {loss}, {}});
  return out;
}

Artifacts sample(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  const auto data = make_data(cfg, cfg.run.seed);
  const ScoreBackend backend = make_backend(cfg, sched, data, cfg.run.seed);
  sampler::SampleOptions so;
  so.guidance = cfg.guidance;
  so.label = cfg.sample.label;
  so.n = cfg.sample.n;
  so.seed = derive_seed(cfg.run.seed, kSampleSeed);
  so.record = cfg.sample.record;
  so.noise_on = cfg.sample.noise;
  const sampler::SampleResult res = sampler::sample(*backend.source, sched, so);

  Artifacts out{{"samples.csv", sampler::samples_csv(res.samples, so.label, so.guidance.mode, so.seed)}};
  plot::PlotSpec spec{plot::Kind::kScatter, "samples (" + std::string(guidance::to_string(so.guidance.mode)) + ")",
                      "x0", "x1", false, {}, {}};
  spec.series.push_back(scatter_series("data", positions(data), "#bbbbbb"));
  spec.series.push_back(scatter_series("samples", res.samples));
  add_plot(out, "samples.svg", spec);
  if (so.record) {
    out["trajectories.json"] = sampler::trajectories_json(res.trajectories, so.guidance.mode);
    plot::PlotSpec ov{plot::Kind::kTrajectoryOverlay, "sampling trajectories", "x0", "x1", false, {}, {}};
    ov.series.push_back(scatter_series("data", positions(data), "#bbbbbb"));
    const std::size_t shown = std::min<std::size_t>(res.trajectories.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
      plot::Series s{i == 0 ? "trajectory" : "", {}, true, "#1f77b4"};
      for (const Vector& z : res.trajectories[i].states) s.points.emplace_back(z[0], z[1]);
      ov.series.push_back(std::move(s));
    }
    add_plot(out, "trajectories.svg", ov);
  }
  return out;
}

Artifacts analyze_spectrum(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  const analysis::EmbeddedMoons setup(embedded_setup(cfg), sched);
  const auto rep = analysis::spectrum_report([&](int t) { return setup.scores(t); }, cfg.analysis.timesteps,
                                             cfg.guidance.gap_ratio);
  Artifacts out{{"spectrum.json", analysis::to_json(rep)}, {"spectrum.csv", analysis::to_csv(rep)}};
  plot::PlotSpec spec{plot::Kind::kMultiLine, "singular values of unconditional scores", "index",
                      "singular value", true, {}, {}};
  for (std::size_t k = 0; k < rep.timesteps.size(); ++k) {
    plot::Series s{"t = " + std::to_string(rep.timesteps[k]), {}, true, ""};
    for (std::size_t i = 0; i < rep.uncond[k].size(); ++i) {
      if (rep.uncond[k][i] > 0) s.points.emplace_back(static_cast<double>(i + 1), rep.uncond[k][i]);
    }
    spec.series.push_back(std::move(s));
  }
  add_plot(out, "spectrum.svg", spec);
  return out;
}

Artifacts analyze_alignment(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  const analysis::EmbeddedMoons setup(embedded_setup(cfg), sched);
  const auto rep = analysis::alignment_report([&](int t) { return setup.scores(t); }, cfg.analysis.timesteps,
                                              cfg.guidance.gap_ratio);
  Artifacts out{{"alignment.json", analysis::to_json(rep)}, {"alignment.csv", analysis::to_csv(rep)}};
  for (int greedy = 0; greedy < 2; ++greedy) {
    plot::PlotSpec spec{plot::Kind::kMultiLine,
                        greedy ? "matched singular-vector similarity" : "singular-vector similarity", "index",
                        "|cos|", false, {}, {}};
    const auto& curves = greedy ? rep.greedy : rep.indexed;
    for (std::size_t k = 0; k < rep.timesteps.size(); ++k) {
      plot::Series s{"t = " + std::to_string(rep.timesteps[k]), {}, true, ""};
      for (std::size_t i = 0; i < curves[k].values.size(); ++i) {
        s.points.emplace_back(static_cast<double>(i + 1), curves[k].values[i]);
      }
      spec.series.push_back(std::move(s));
    }
    add_plot(out, greedy ? "alignment_greedy.svg" : "alignment.svg", spec);
  }
  return out;
}

Artifacts analyze_trajectory(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  const auto data = make_data(cfg, cfg.run.seed);
  const ScoreBackend backend = make_backend(cfg, sched, data, cfg.run.seed);
  sampler::SampleOptions so;
  so.guidance = cfg.guidance;
  so.label = cfg.sample.label;
  so.n = cfg.analysis.trajectories;
  so.seed = derive_seed(cfg.run.seed, kSampleSeed);
  so.record = true;
  so.noise_on = cfg.sample.noise;
  const auto res = sampler::sample(*backend.source, sched, so);
  const auto ratios = analysis::trajectory_ratios(res.trajectories);

  std::string csv = "t,uncond_median,cond_median,guided_median\n";
  for (std::size_t i = 0; i < ratios.timesteps.size(); ++i) {
    csv += std::to_string(ratios.timesteps[i]) + "," + io::format_double(ratios.uncond_median[i]) + "," +
           io::format_double(ratios.cond_median[i]) + "," + io::format_double(ratios.guided_median[i]) + "\n";
  }
  Artifacts out{{"trajectory_ratios.csv", csv}};

  plot::PlotSpec rs{plot::Kind::kMultiLine, "median tangent/normal ratio", "t", "ratio", true, {}, {}};
  const std::pair<const char*, const Vector*> kinds[] = {
      {"unconditional", &ratios.uncond_median}, {"conditional", &ratios.cond_median}, {"guided", &ratios.guided_median}};
  for (const auto& [name, values] : kinds) {
    plot::Series s{name, {}, true, ""};
    for (std::size_t i = 0; i < ratios.timesteps.size(); ++i) {
      const double v = (*values)[i];
      if (std::isfinite(v) && v > 0) s.points.emplace_back(ratios.timesteps[i], v);
    }
    rs.series.push_back(std::move(s));
  }
  add_plot(out, "ratios.svg", rs);

  plot::PlotSpec ov{plot::Kind::kTrajectoryOverlay, "trajectories and guided scores", "x0", "x1", false, {}, {}};
  ov.series.push_back(scatter_series("data", positions(data), "#bbbbbb"));
  const std::size_t shown = std::min<std::size_t>(res.trajectories.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    plot::Series s{i == 0 ? "trajectory" : "", {}, true, "#1f77b4"};
    for (const Vector& z : res.trajectories[i].states) s.points.emplace_back(z[0], z[1]);
    ov.series.push_back(std::move(s));
  }
  ov.series.push_back(scatter_series("final", res.samples, "#d62728"));
  add_plot(out, "trajectories.svg", ov);
  return out;
}

eval::EvalReport evaluate_report(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  eval::EvalReport rep;
  for (std::size_t k = 0; k < cfg.eval.seeds; ++k) {
    const std::uint64_t seed = cfg.run.seed + k;
    const auto data = make_data(cfg, seed);
    const ScoreBackend backend = make_backend(cfg, sched, data, seed);
    eval::CompareOptions opts;
    opts.scale = cfg.guidance.scale;
    opts.tie_tolerance = cfg.guidance.tie_tolerance;
    opts.samples_per_mode = cfg.eval.samples_per_mode;
    opts.seed = derive_seed(seed, kSampleSeed);
    opts.noise_on = cfg.sample.noise;
    rep.per_seed.push_back(eval::compare_modes(*backend.source, sched, positions(data), opts));
    rep.seeds.push_back(seed);
  }
  return rep;
}

Artifacts evaluate(const RunConfig& cfg) {
  const eval::EvalReport rep = evaluate_report(cfg);
  Artifacts out{{"eval.json", eval::to_json(rep)}, {"eval.csv", eval::to_csv(rep)}};
  if (!rep.per_seed.empty()) {
    const auto data = make_data(cfg, rep.seeds.front());
    for (const auto& m : rep.per_seed.front()) {
      const std::string name(guidance::to_string(m.mode));
      plot::PlotSpec spec{plot::Kind::kScatter, name + " samples, w = " + io::format_double(cfg.guidance.scale),
                          "x0", "x1", false, {}, {}};
      spec.series.push_back(scatter_series("data", positions(data), "#bbbbbb"));
      spec.series.push_back(scatter_series(name, m.samples));
      add_plot(out, "samples_" + name + ".svg", spec);
    }
  }
  return out;
}

Artifacts bench(const RunConfig& cfg) {
  const NoiseSchedule sched = make_schedule(cfg);
  const auto data = make_data(cfg, cfg.run.seed);
  const ScoreBackend backend = make_backend(cfg, sched, data, cfg.run.seed);
  const auto rep = eval::bench_overhead(*backend.source, sched, cfg.bench.samples,
                                        derive_seed(cfg.run.seed, kBenchSeed), cfg.bench.repeats,
                                        cfg.guidance.scale);
  return {{"bench.json", eval::to_json(rep)}};
}

Artifacts repro(const RunConfig& cfg) {
  Artifacts out;
  const std::pair<const char*, Artifacts (*)(const RunConfig&)> steps[] = {
      {"gen-data", gen_data},
      {"train", train},
      {"sample", sample},
      {"analyze-spectrum", analyze_spectrum},
      {"analyze-alignment", analyze_alignment},
      {"analyze-trajectory", analyze_trajectory},
      {"evaluate", evaluate},
      {"bench", bench}};
  for (const auto& [name, fn] : steps) out.merge(prefixed(name, fn(cfg)));
  return out;
}

bool is_timing_artifact(const std::string& name) {
  return name == "bench.json" || name.ends_with("/bench.json");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tangential-damping guidance toolkit", "tcfg"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode, checkpoint;
  std::uint64_t seed = 0;
  double scale = 0;
  int steps = 0;
  std::size_t samples = 0;
  bool no_noise = false, oracle = false, record = false;

  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "write the two-moons dataset"},
      {"train", "train the score model and write a checkpoint"},
      {"sample", "draw guided samples"},
      {"analyze-spectrum", "singular spectra of embedded score samples"},
      {"analyze-alignment", "singular-vector alignment between conditional and unconditional scores"},
      {"analyze-trajectory", "tangent/normal ratios along sampling trajectories"},
      {"evaluate", "compare guidance modes over several seeds"},
      {"bench", "time CFG against TCFG"},
      {"repro", "run the full toy pipeline"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "config file (section.key = value)");
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--mode", mode, "guidance mode")->check(CLI::IsMember({"cond", "cfg", "tcfg", "tcfg-pooled"}));
    sub->add_option("--scale", scale, "guidance scale w");
    sub->add_option("--steps", steps, "diffusion steps T");
    sub->add_option("--samples", samples, "number of chains");
    sub->add_option("--checkpoint", checkpoint, "model checkpoint to load");
    sub->add_flag("--no-noise", no_noise, "deterministic sampling (no ancestral noise)");
    sub->add_flag("--oracle", oracle, "use the analytic score oracle");
    sub->add_flag("--record-trajectories", record, "record full trajectories");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    std::vector<config::Override> overrides;
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--seed")) overrides.emplace_back("run.seed", std::to_string(seed));
    if (given("--out")) overrides.emplace_back("run.out", out_dir);
    if (given("--mode")) overrides.emplace_back("guidance.mode", mode);
    if (given("--scale")) overrides.emplace_back("guidance.scale", io::format_double(scale));
    if (given("--steps")) overrides.emplace_back("schedule.steps", std::to_string(steps));
    if (given("--samples")) overrides.emplace_back("sample.n", std::to_string(samples));
    if (given("--checkpoint")) overrides.emplace_back("sample.checkpoint", checkpoint);
    if (no_noise) overrides.emplace_back("sample.noise", "false");
    if (oracle) overrides.emplace_back("sample.oracle", "true");
    if (record) overrides.emplace_back("sample.record", "true");
    std::optional<std::filesystem::path> path;
    if (given("--config")) path = config_path;
    RunConfig cfg = config::parse_config(path, overrides);
    if (cfg.run.out.empty()) cfg.run.out = (std::filesystem::path("runs") / (command + "-" + timestamp())).string();

    Artifacts artifacts;
    if (command == "gen-data") artifacts = gen_data(cfg);
    else if (command == "train") artifacts = train(cfg);
    else if (command == "sample") artifacts = sample(cfg);
    else if (command == "analyze-spectrum") artifacts = analyze_spectrum(cfg);
    else if (command == "analyze-alignment") artifacts = analyze_alignment(cfg);
    else if (command == "analyze-trajectory") artifacts = analyze_trajectory(cfg);
    else if (command == "evaluate") artifacts = evaluate(cfg);
    else if (command == "bench") artifacts = bench(cfg);
    else artifacts = repro(cfg);

    const std::filesystem::path dir(cfg.run.out);
    io::write_text_file(dir / "config.resolved.txt", config::serialize(cfg));
    for (const auto& [name, contents] : artifacts) io::write_text_file(dir / name, contents);
    out << command << ": wrote " << artifacts.size() + 1 << " files to " << dir.string() << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_config_error() ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace tcfg::pipeline
