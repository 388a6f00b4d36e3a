#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tcfg/guidance.hpp"
#include "tcfg/model.hpp"

namespace tcfg::config {

// Every field has a default; see `describe()` for the full key list.
struct RunConfig {
  struct Data {
    std::size_t n_samples = 2000;
    double noise_std = 0.05;
  } data;
  struct Schedule {
    int steps = 100;
    double beta_min = 1e-4;
    double beta_max = 0.02;
  } schedule;
  model::ModelConfig model;
  model::TrainConfig train;  // train.seed is derived from run.seed
  guidance::GuidanceConfig guidance;
  struct Sample {
    std::size_t n = 500;
    int label = 0;
    bool noise = true;
    bool oracle = false;
    bool record = false;
    std::string checkpoint;  // empty: train in-process
  } sample;
  struct Analysis {
    std::size_t ambient_dim = 10;
    std::size_t data_points = 6000;
    std::size_t n_scores = 2000;
    int anchor_label = 0;
    double anchor_angle = 1.5707963267948966;
    std::vector<int> timesteps{1, 5, 10, 30, 50};
    std::size_t trajectories = 300;
  } analysis;
  struct Eval {
    std::size_t seeds = 5;
    std::size_t samples_per_mode = 500;
  } eval;
  struct Bench {
    std::size_t samples = 256;
    int repeats = 5;
  } bench;
  struct Run {
    std::uint64_t seed = 0;
    std::string out;  // empty: runs/<command>-<timestamp>
  } run;
};

using Override = std::pair<std::string, std::string>;

// Applies `key = value` lines; '#' starts a comment. Throws kUnknownKey or
// kTypeMismatch naming the offending key.
void apply_text(RunConfig& cfg, const std::string& text);
void apply(RunConfig& cfg, const std::string& key, const std::string& value);

// Defaults, then the file (if any), then the overrides in order. A path that
// does not exist throws kMissingFile.
RunConfig parse_config(const std::optional<std::filesystem::path>& path,
                       const std::vector<Override>& overrides = {});

// Fully resolved config in the same text format `apply_text` reads.
std::string serialize(const RunConfig& cfg);

// (key, default value, description) for documentation.
struct KeyDoc {
  std::string key;
  std::string default_value;
  std::string description;
};
std::vector<KeyDoc> describe();

}  // namespace tcfg::config
