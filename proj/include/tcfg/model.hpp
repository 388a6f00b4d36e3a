#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tcfg/dataset.hpp"
#include "tcfg/matrix.hpp"
#include "tcfg/rng.hpp"
#include "tcfg/schedule.hpp"

namespace tcfg::model {

inline constexpr int kNullLabel = 2;
inline constexpr int kLabelCount = 3;

enum class Activation { kSilu, kIdentity };

struct ModelConfig {
  std::size_t data_dim = 2;
  std::size_t hidden = 128;
  std::size_t time_freqs = 8;  // sin/cos pairs
  std::size_t label_dim = 8;
  Activation activation = Activation::kSilu;

  std::size_t input_dim() const noexcept { return data_dim + 2 * time_freqs + label_dim; }
  bool operator==(const ModelConfig&) const = default;
};

// Offsets of each parameter block inside the flat parameter vector.
struct ParamLayout {
  std::size_t w1, b1, w2, b2, labels, total;
  explicit ParamLayout(const ModelConfig& c);
};

// eps-prediction network:
//   out = W2 act(W1 [z, time_embed(t), label_embed(y)] + b1) + b2
// W1 is hidden x input, W2 is data x hidden, label table is 3 x label_dim
// with row 2 reserved for the null condition.
class ScoreModel {
 public:
  // Hidden layer uniform(+-1/sqrt(fan_in)), label table N(0, 1), output
  // layer and biases zero.
  ScoreModel(const ModelConfig& config, std::uint64_t seed);
  ScoreModel(const ModelConfig& config, Vector params);

  const ModelConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  std::span<const double> label_embedding(int label) const;

  Vector forward(std::span<const double> z, int t, int label) const;

  // Fills every parameter (including the output layer) with N(0, scale^2).
  void randomize(Rng& rng, double scale);

 private:
  ModelConfig config_;
  ParamLayout layout_;
  Vector params_;
};

Vector time_embedding(int t, std::size_t freqs);

// One supervised example: predict `eps` from (z, t, label).
struct Example {
  Vector z;
  int t = 1;
  int label = 0;
  Vector eps;
};

// Mean over examples of ||eps_hat - eps||^2 and its gradient w.r.t. the flat
// parameter vector.
double loss_and_gradient(const ScoreModel& model, std::span<const Example> batch,
                         Vector* gradient);

struct TrainConfig {
  int iterations = 5000;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  double label_drop_prob = 0.1;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad, const TrainConfig& cfg);
  long steps() const noexcept { return t_; }

 private:
  Vector m_, v_;
  long t_ = 0;
};

struct Trainer {
  ScoreModel& model;
  Adam adam;
  explicit Trainer(ScoreModel& m) : model(m), adam(m.params().size()) {}
};

// Draws t ~ U{1..T} and eps ~ N(0, I) per item, swaps the label for the null
// label with probability label_drop_prob, and applies one Adam update.
// Returns the pre-update batch loss.
double train_step(Trainer& trainer, std::span<const dataset::LabeledPoint> batch,
                  const NoiseSchedule& sched, const TrainConfig& config, Rng& rng);

struct TrainResult {
  Vector loss_history;
};

// Minibatches are drawn with replacement from `data`. Deterministic in
// config.seed.
TrainResult train(ScoreModel& model, std::span<const dataset::LabeledPoint> data,
                  const NoiseSchedule& sched, const TrainConfig& config);

// Largest per-block relative error ||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||)
// over the five parameter blocks, with central differences of step `h`.
double grad_check(const ScoreModel& model, std::span<const Example> probes, double h = 1e-5);

struct Checkpoint {
  ScoreModel model;
  std::uint64_t schedule_hash;
  int schedule_steps;
};

void save_checkpoint(const std::filesystem::path& path, const ScoreModel& model,
                     const NoiseSchedule& sched);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_json(const ScoreModel& model, const NoiseSchedule& sched);

}  // namespace tcfg::model
