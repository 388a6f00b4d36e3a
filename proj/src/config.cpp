#include "tcfg/config.hpp"

#include <charconv>
#include <filesystem>
#include <functional>
#include <sstream>

#include "tcfg/error.hpp"
#include "tcfg/io.hpp"

namespace tcfg::config {
namespace {

[[noreturn]] void type_error(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::kTypeMismatch,
              "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v, const char* expected) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && v[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || v.empty()) type_error(key, v, expected);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  type_error(key, v, "true|false");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item), "comma-separated integers"));
  if (out.empty()) type_error(key, v, "comma-separated integers");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  const char* key;
  const char* description;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define TCFG_NUM_FIELD(KEY, MEMBER, TYPE, EXPECTED, DESC)                                       \
  Field {                                                                                       \
    KEY, DESC,                                                                                  \
        [](RunConfig& c, const std::string& k, const std::string& v) {                          \
          c.MEMBER = parse_number<TYPE>(k, v, EXPECTED);                                        \
        },                                                                                      \
        [](const RunConfig& c) -> std::string {                                                 \
          if constexpr (std::is_floating_point_v<TYPE>) return io::format_double(c.MEMBER);     \
          else return std::to_string(c.MEMBER);                                                 \
        }                                                                                       \
  }

#define TCFG_BOOL_FIELD(KEY, MEMBER, DESC)                                                       \
  Field {                                                                                       \
    KEY, DESC, [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = parse_bool(k, v); }, \
        [](const RunConfig& c) -> std::string { return c.MEMBER ? "true" : "false"; }           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TCFG_NUM_FIELD("data.n_samples", data.n_samples, std::size_t, "count", "two-moons points"),
      TCFG_NUM_FIELD("data.noise_std", data.noise_std, double, "number", "isotropic noise std"),
      TCFG_NUM_FIELD("schedule.steps", schedule.steps, int, "integer", "diffusion steps T"),
      TCFG_NUM_FIELD("schedule.beta_min", schedule.beta_min, double, "number", "beta at t = 1"),
      TCFG_NUM_FIELD("schedule.beta_max", schedule.beta_max, double, "number", "beta at t = T"),
      TCFG_NUM_FIELD("model.hidden", model.hidden, std::size_t, "count", "hidden width"),
      TCFG_NUM_FIELD("model.time_freqs", model.time_freqs, std::size_t, "count", "sinusoidal frequency pairs"),
      TCFG_NUM_FIELD("model.label_dim", model.label_dim, std::size_t, "count", "label embedding width"),
      Field{"model.activation", "silu | identity",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v == "silu") c.model.activation = model::Activation::kSilu;
              else if (v == "identity") c.model.activation = model::Activation::kIdentity;
              else type_error(k, v, "silu|identity");
            },
            [](const RunConfig& c) -> std::string {
              return c.model.activation == model::Activation::kSilu ? "silu" : "identity";
            }},
      TCFG_NUM_FIELD("train.iterations", train.iterations, int, "integer", "Adam steps"),
      TCFG_NUM_FIELD("train.learning_rate", train.learning_rate, double, "number", "Adam learning rate"),
      TCFG_NUM_FIELD("train.batch_size", train.batch_size, std::size_t, "count", "minibatch size"),
      TCFG_NUM_FIELD("train.label_drop_prob", train.label_drop_prob, double, "number",
                     "probability of training on the null label"),
      TCFG_NUM_FIELD("train.adam_beta1", train.adam_beta1, double, "number", "Adam beta1"),
      TCFG_NUM_FIELD("train.adam_beta2", train.adam_beta2, double, "number", "Adam beta2"),
      TCFG_NUM_FIELD("train.adam_eps", train.adam_eps, double, "number", "Adam epsilon"),
      Field{"guidance.mode", "cond | cfg | tcfg | tcfg-pooled",
            [](RunConfig& c, const std::string&, const std::string& v) { c.guidance.mode = guidance::parse_mode(v); },
            [](const RunConfig& c) -> std::string { return std::string(guidance::to_string(c.guidance.mode)); }},
      TCFG_NUM_FIELD("guidance.scale", guidance.scale, double, "number", "guidance scale w"),
      TCFG_NUM_FIELD("guidance.tie_tolerance", guidance.tie_tolerance, double, "number",
                     "relative sigma gap treated as a tie"),
      TCFG_NUM_FIELD("guidance.gap_ratio", guidance.gap_ratio, double, "number",
                     "minimum spectral-gap ratio (pooled variant)"),
      TCFG_NUM_FIELD("sample.n", sample.n, std::size_t, "count", "chains per run"),
      TCFG_NUM_FIELD("sample.label", sample.label, int, "integer", "condition label (0 or 1)"),
      TCFG_BOOL_FIELD("sample.noise", sample.noise, "ancestral noise on"),
      TCFG_BOOL_FIELD("sample.oracle", sample.oracle, "use the analytic score oracle"),
      TCFG_BOOL_FIELD("sample.record", sample.record, "record full trajectories"),
      Field{"sample.checkpoint", "model checkpoint path (empty: train in-process)",
            [](RunConfig& c, const std::string&, const std::string& v) { c.sample.checkpoint = v; },
            [](const RunConfig& c) { return c.sample.checkpoint; }},
      TCFG_NUM_FIELD("analysis.ambient_dim", analysis.ambient_dim, std::size_t, "count", "embedding dimension D"),
      TCFG_NUM_FIELD("analysis.data_points", analysis.data_points, std::size_t, "count",
                     "noise-free points behind the oracle"),
      TCFG_NUM_FIELD("analysis.n_scores", analysis.n_scores, std::size_t, "count", "score samples per timestep"),
      TCFG_NUM_FIELD("analysis.anchor_label", analysis.anchor_label, int, "integer", "arc of the anchor point"),
      TCFG_NUM_FIELD("analysis.anchor_angle", analysis.anchor_angle, double, "number", "arc parameter of the anchor"),
      Field{"analysis.timesteps", "comma-separated steps to analyze",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.analysis.timesteps = parse_int_list(k, v); },
            [](const RunConfig& c) { return join(c.analysis.timesteps); }},
      TCFG_NUM_FIELD("analysis.trajectories", analysis.trajectories, std::size_t, "count",
                     "chains for trajectory analysis"),
      TCFG_NUM_FIELD("eval.seeds", eval.seeds, std::size_t, "count", "seeds run.seed .. run.seed + n - 1"),
      TCFG_NUM_FIELD("eval.samples_per_mode", eval.samples_per_mode, std::size_t, "count",
                     "samples per guidance mode, split over both labels"),
      TCFG_NUM_FIELD("bench.samples", bench.samples, std::size_t, "count", "chains per timed run"),
      TCFG_NUM_FIELD("bench.repeats", bench.repeats, int, "integer", "alternating CFG/TCFG runs"),
      TCFG_NUM_FIELD("run.seed", run.seed, std::uint64_t, "unsigned integer", "global seed"),
      Field{"run.out", "output directory (empty: runs/<command>-<timestamp>)",
            [](RunConfig& c, const std::string&, const std::string& v) { c.run.out = v; },
            [](const RunConfig& c) { return c.run.out; }},
  };
  return table;
}

#undef TCFG_NUM_FIELD
#undef TCFG_BOOL_FIELD

}  // namespace

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, key, value);
      return;
    }
  }
  throw Error(ErrorKind::kUnknownKey, "unknown config key '" + key + "'");
}

void apply_text(RunConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kTypeMismatch, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

RunConfig parse_config(const std::optional<std::filesystem::path>& path,
                       const std::vector<Override>& overrides) {
  RunConfig cfg;
  if (path) {
    if (!std::filesystem::exists(*path)) {
      throw Error(ErrorKind::kMissingFile, "config file not found: " + path->string());
    }
    apply_text(cfg, io::read_text_file(*path));
  }
  for (const auto& [k, v] : overrides) apply(cfg, k, v);
  return cfg;
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::vector<KeyDoc> describe() {
  const RunConfig defaults;
  std::vector<KeyDoc> out;
  for (const Field& f : fields()) out.push_back({f.key, f.get(defaults), f.description});
  return out;
}

}  // namespace tcfg::config
