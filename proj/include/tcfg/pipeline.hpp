#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tcfg/config.hpp"
#include "tcfg/dataset.hpp"
#include "tcfg/eval.hpp"
#include "tcfg/model.hpp"
#include "tcfg/sampler.hpp"
#include "tcfg/schedule.hpp"

namespace tcfg::pipeline {

// Relative file name -> contents. Every command returns its artifacts so that
// callers can write them or compare reruns in memory.
using Artifacts = std::map<std::string, std::string>;

enum Purpose : std::uint64_t { kDataSeed = 1, kInitSeed = 2, kTrainSeed = 3, kSampleSeed = 4,
                               kAnalysisSeed = 5, kBenchSeed = 6 };

NoiseSchedule make_schedule(const config::RunConfig& cfg);
std::vector<dataset::LabeledPoint> make_data(const config::RunConfig& cfg, std::uint64_t seed);

struct TrainedModel {
  model::ScoreModel model;
  Vector loss_history;
};

TrainedModel train_model(const config::RunConfig& cfg, const NoiseSchedule& sched,
                         std::span<const dataset::LabeledPoint> data, std::uint64_t seed);

// Analytic oracle when cfg.sample.oracle, else the checkpoint in
// cfg.sample.checkpoint, else a model trained in-process.
struct ScoreBackend {
  std::unique_ptr<model::ScoreModel> model;
  std::unique_ptr<sampler::ScoreSource> source;
  Vector loss_history;
};
ScoreBackend make_backend(const config::RunConfig& cfg, const NoiseSchedule& sched,
                          std::span<const dataset::LabeledPoint> data, std::uint64_t seed);

Artifacts gen_data(const config::RunConfig& cfg);
Artifacts train(const config::RunConfig& cfg);
Artifacts sample(const config::RunConfig& cfg);
Artifacts analyze_spectrum(const config::RunConfig& cfg);
Artifacts analyze_alignment(const config::RunConfig& cfg);
Artifacts analyze_trajectory(const config::RunConfig& cfg);
Artifacts evaluate(const config::RunConfig& cfg);
Artifacts bench(const config::RunConfig& cfg);
Artifacts repro(const config::RunConfig& cfg);

// Files whose contents depend on wall-clock time.
bool is_timing_artifact(const std::string& name);

// Per-seed evaluation used by `evaluate`: fresh data, model and samples for
// each seed in run.seed .. run.seed + eval.seeds - 1.
eval::EvalReport evaluate_report(const config::RunConfig& cfg);

// Full command line (args[0] is the subcommand). Writes artifacts plus
// config.resolved.txt to the output directory. Returns 0 on success, 2 on
// configuration errors, 3 on runtime errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

}  // namespace tcfg::pipeline
