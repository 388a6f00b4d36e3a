#include "tcfg/model.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "tcfg/error.hpp"
#include "tcfg/io.hpp"

namespace tcfg::model {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_label(int label) {
  if (label < 0 || label >= kLabelCount) {
    throw Error(ErrorKind::kInvalidLabel, "label must be 0, 1 or 2 (null)");
  }
}

// Forward pass for one input with the intermediates needed by backprop.
struct Activations {
  Vector x;  // network input
  Vector h;  // pre-activation
  Vector a;  // post-activation
  Vector out;
};

void forward_full(const ScoreModel& m, std::span<const double> z, int t, int label,
                  Activations& act) {
  const ModelConfig& c = m.config();
  const ParamLayout& l = m.layout();
  auto p = m.params();
  if (z.size() != c.data_dim) throw Error(ErrorKind::kDimensionMismatch, "forward: wrong input dimension");
  check_label(label);

  act.x.resize(c.input_dim());
  std::copy(z.begin(), z.end(), act.x.begin());
  const Vector te = time_embedding(t, c.time_freqs);
  std::copy(te.begin(), te.end(), act.x.begin() + static_cast<std::ptrdiff_t>(c.data_dim));
  auto emb = m.label_embedding(label);
  std::copy(emb.begin(), emb.end(), act.x.end() - static_cast<std::ptrdiff_t>(c.label_dim));

  const std::size_t in = c.input_dim();
  act.h.assign(c.hidden, 0.0);
  act.a.resize(c.hidden);
  for (std::size_t j = 0; j < c.hidden; ++j) {
    const double* w = p.data() + l.w1 + j * in;
    double s = p[l.b1 + j];
    for (std::size_t i = 0; i < in; ++i) s += w[i] * act.x[i];
    act.h[j] = s;
    act.a[j] = c.activation == Activation::kSilu ? s * sigmoid(s) : s;
  }
  act.out.resize(c.data_dim);
  for (std::size_t o = 0; o < c.data_dim; ++o) {
    const double* w = p.data() + l.w2 + o * c.hidden;
    double s = p[l.b2 + o];
    for (std::size_t j = 0; j < c.hidden; ++j) s += w[j] * act.a[j];
    act.out[o] = s;
  }
}

}  // namespace

ParamLayout::ParamLayout(const ModelConfig& c) {
  w1 = 0;
  b1 = w1 + c.hidden * c.input_dim();
  w2 = b1 + c.hidden;
  b2 = w2 + c.data_dim * c.hidden;
  labels = b2 + c.data_dim;
  total = labels + kLabelCount * c.label_dim;
}

Vector time_embedding(int t, std::size_t freqs) {
  Vector e(2 * freqs);
  for (std::size_t k = 0; k < freqs; ++k) {
    const double omega = std::exp(-std::log(1000.0) * static_cast<double>(k) / static_cast<double>(freqs));
    e[k] = std::sin(t * omega);
    e[freqs + k] = std::cos(t * omega);
  }
  return e;
}

ScoreModel::ScoreModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), layout_(config), params_(layout_.total, 0.0) {
  if (config.data_dim == 0 || config.hidden == 0) {
    throw Error(ErrorKind::kInvalidInput, "model: dimensions must be positive");
  }
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.input_dim()));
  std::uniform_real_distribution<double> uni(-bound, bound);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = layout_.w1; i < layout_.b1; ++i) params_[i] = uni(rng);
  for (std::size_t i = layout_.labels; i < layout_.total; ++i) params_[i] = gauss(rng);
}

ScoreModel::ScoreModel(const ModelConfig& config, Vector params)
    : config_(config), layout_(config), params_(std::move(params)) {
  if (params_.size() != layout_.total) {
    throw Error(ErrorKind::kDimensionMismatch, "model: parameter count does not match architecture");
  }
  if (!all_finite(params_)) throw Error(ErrorKind::kInvalidInput, "model: non-finite parameters");
}

std::span<const double> ScoreModel::label_embedding(int label) const {
  check_label(label);
  return {params_.data() + layout_.labels + static_cast<std::size_t>(label) * config_.label_dim,
          config_.label_dim};
}

Vector ScoreModel::forward(std::span<const double> z, int t, int label) const {
  Activations act;
  forward_full(*this, z, t, label, act);
  return std::move(act.out);
}

void ScoreModel::randomize(Rng& rng, double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  for (double& p : params_) p = gauss(rng);
}

double loss_and_gradient(const ScoreModel& model, std::span<const Example> batch,
                         Vector* gradient) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyInput, "loss: empty batch");
  const ModelConfig& c = model.config();
  const ParamLayout& l = model.layout();
  auto p = model.params();
  const std::size_t in = c.input_dim();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  if (gradient) gradient->assign(l.total, 0.0);
  Activations act;
  Vector dout(c.data_dim), dh(c.hidden);
  double loss = 0.0;
  for (const Example& ex : batch) {
    if (ex.eps.size() != c.data_dim) throw Error(ErrorKind::kDimensionMismatch, "loss: wrong target dimension");
    forward_full(model, ex.z, ex.t, ex.label, act);
    double sq = 0.0;
    for (std::size_t o = 0; o < c.data_dim; ++o) {
      const double r = act.out[o] - ex.eps[o];
      sq += r * r;
      dout[o] = 2.0 * r * inv_n;
    }
    loss += sq * inv_n;
    if (!gradient) continue;

    double* g = gradient->data();
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t o = 0; o < c.data_dim; ++o) {
      g[l.b2 + o] += dout[o];
      const double* w = p.data() + l.w2 + o * c.hidden;
      double* gw = g + l.w2 + o * c.hidden;
      for (std::size_t j = 0; j < c.hidden; ++j) {
        gw[j] += dout[o] * act.a[j];
        dh[j] += dout[o] * w[j];
      }
    }
    if (c.activation == Activation::kSilu) {
      for (std::size_t j = 0; j < c.hidden; ++j) {
        const double s = sigmoid(act.h[j]);
        dh[j] *= s * (1.0 + act.h[j] * (1.0 - s));
      }
    }
    const std::size_t emb_offset = c.data_dim + 2 * c.time_freqs;
    double* gemb = g + l.labels + static_cast<std::size_t>(ex.label) * c.label_dim;
    for (std::size_t j = 0; j < c.hidden; ++j) {
      const double d = dh[j];
      if (d == 0.0) continue;
      g[l.b1 + j] += d;
      double* gw = g + l.w1 + j * in;
      const double* w = p.data() + l.w1 + j * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += d * act.x[i];
      for (std::size_t e = 0; e < c.label_dim; ++e) gemb[e] += d * w[emb_offset + e];
    }
  }
  return loss;
}

void Adam::step(std::span<double> params, std::span<const double> grad, const TrainConfig& cfg) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "adam: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg.adam_beta1 * m_[i] + (1.0 - cfg.adam_beta1) * grad[i];
    v_[i] = cfg.adam_beta2 * v_[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

double train_step(Trainer& trainer, std::span<const dataset::LabeledPoint> batch,
                  const NoiseSchedule& sched, const TrainConfig& config, Rng& rng) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyInput, "train_step: empty batch");
  std::uniform_int_distribution<int> step(1, sched.steps());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Example> examples;
  examples.reserve(batch.size());
  for (const auto& pt : batch) {
    Example ex;
    ex.t = step(rng);
    ex.eps.resize(pt.position.size());
    for (double& e : ex.eps) e = gauss(rng);
    ex.label = unit(rng) < config.label_drop_prob ? kNullLabel : pt.label;
    ex.z = forward_diffuse(pt.position, ex.t, ex.eps, sched);
    examples.push_back(std::move(ex));
  }
  Vector grad;
  const double loss = loss_and_gradient(trainer.model, examples, &grad);
  trainer.adam.step(trainer.model.params(), grad, config);
  return loss;
}

TrainResult train(ScoreModel& model, std::span<const dataset::LabeledPoint> data,
                  const NoiseSchedule& sched, const TrainConfig& config) {
  if (data.empty()) throw Error(ErrorKind::kEmptyInput, "train: empty dataset");
  if (!(config.learning_rate > 0.0)) throw Error(ErrorKind::kInvalidInput, "train: learning_rate must be > 0");
  if (config.label_drop_prob < 0.0 || config.label_drop_prob > 1.0) {
    throw Error(ErrorKind::kInvalidInput, "train: label_drop_prob must lie in [0, 1]");
  }
  if (config.batch_size == 0) throw Error(ErrorKind::kInvalidInput, "train: batch_size must be > 0");
  Rng rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  Trainer trainer(model);
  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(std::max(config.iterations, 0)));
  std::vector<dataset::LabeledPoint> batch(config.batch_size);
  for (int it = 0; it < config.iterations; ++it) {
    for (auto& b : batch) b = data[pick(rng)];
    result.loss_history.push_back(train_step(trainer, batch, sched, config, rng));
  }
  return result;
}

double grad_check(const ScoreModel& model, std::span<const Example> probes, double h) {
  Vector analytic;
  loss_and_gradient(model, probes, &analytic);
  ScoreModel work = model;
  auto p = work.params();
  Vector numeric(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = loss_and_gradient(work, probes, nullptr);
    p[i] = saved - h;
    const double down = loss_and_gradient(work, probes, nullptr);
    p[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  // Per-block norms keep entries that are near zero from dominating the
  // relative error.
  const ParamLayout& l = model.layout();
  const std::size_t bounds[] = {l.w1, l.b1, l.w2, l.b2, l.labels, l.total};
  double worst = 0.0;
  for (int b = 0; b < 5; ++b) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = bounds[b]; i < bounds[b + 1]; ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double denom = std::sqrt(std::max(na, nn));
    if (denom == 0.0) continue;
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

std::string checkpoint_json(const ScoreModel& model, const NoiseSchedule& sched) {
  const ModelConfig& c = model.config();
  const ParamLayout& l = model.layout();
  auto p = model.params();
  auto slice = [&](std::size_t a, std::size_t b) {
    return std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(a),
                               p.begin() + static_cast<std::ptrdiff_t>(b));
  };
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(sched.hash()));
  nlohmann::json j;
  j["format"] = "tcfg-checkpoint";
  j["version"] = 1;
  j["schedule"] = {{"hash", hash}, {"steps", sched.steps()}};
  j["architecture"] = {{"data_dim", c.data_dim},
                       {"hidden", c.hidden},
                       {"time_freqs", c.time_freqs},
                       {"label_dim", c.label_dim},
                       {"activation", c.activation == Activation::kSilu ? "silu" : "identity"}};
  j["parameters"] = {{"w1", slice(l.w1, l.b1)},
                     {"b1", slice(l.b1, l.w2)},
                     {"w2", slice(l.w2, l.b2)},
                     {"b2", slice(l.b2, l.labels)},
                     {"label_embedding", slice(l.labels, l.total)}};
  return j.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const ScoreModel& model,
                     const NoiseSchedule& sched) {
  io::write_text_file(path, checkpoint_json(model, sched));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = io::read_text_file(path);
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "tcfg-checkpoint" || j.at("version") != 1) {
      throw Error(ErrorKind::kInvalidInput, "checkpoint: unsupported format");
    }
    ModelConfig c;
    const auto& a = j.at("architecture");
    c.data_dim = a.at("data_dim");
    c.hidden = a.at("hidden");
    c.time_freqs = a.at("time_freqs");
    c.label_dim = a.at("label_dim");
    const std::string act = a.at("activation");
    if (act == "silu") c.activation = Activation::kSilu;
    else if (act == "identity") c.activation = Activation::kIdentity;
    else throw Error(ErrorKind::kInvalidInput, "checkpoint: unknown activation " + act);
    Vector params;
    for (const char* key : {"w1", "b1", "w2", "b2", "label_embedding"}) {
      const std::vector<double> block = j.at("parameters").at(key);
      params.insert(params.end(), block.begin(), block.end());
    }
    const std::string hash = j.at("schedule").at("hash");
    return Checkpoint{ScoreModel(c, std::move(params)), std::stoull(hash, nullptr, 16),
                      j.at("schedule").at("steps").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace tcfg::model
