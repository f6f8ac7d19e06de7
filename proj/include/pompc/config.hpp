// SPDX-License-Identifier: Apache-2.0
#pragma once

// Training configuration. Struct defaults are the full-scale hyperparameter
// table; desk-scale runs override widths and planner sizes from a config
// file. Text format: one `key = value` per line, `#` starts a comment.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pompc/planner.hpp"
#include "pompc/policy.hpp"
#include "pompc/prior.hpp"
#include "pompc/worldmodel.hpp"

namespace pompc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

struct TrainConfig {
  // general
  std::string env_name = "pendulum";
  std::uint64_t seed = 0;
  long total_steps = 1000000;
  long seeding_steps = 1000;
  long update_every = 1;
  long replay_capacity = 1000000;
  int batch_size = 256;
  double lr = 3e-4;
  double grad_clip = 20.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;

  // world model and value nets
  int enc_dim = 256;
  int num_enc_layers = 2;
  int latent_dim = 512;
  int mlp_dim = 512;
  int simnorm_dim = 8;
  double dropout = 0.01;
  int num_q = 5;
  int num_bins = 101;
  double vmin = -10.0;
  double vmax = 10.0;

  // planner
  int horizon = 3;
  int iterations = 8;
  int population = 512;
  int policy_samples = 24;
  int elites = 64;
  double min_std = 0.05;
  double max_std = 2.0;
  double temperature = 1.0;
  bool train_use_mean = false;
  bool eval_use_mean = true;

  // losses
  double discount = 0.99;
  double rho = 0.5;
  double consistency_coef = 20.0;
  double reward_coef = 0.1;
  double value_coef = 0.1;
  double entropy_coef = 1e-4;
  double tau = 0.01;
  double biased_value_coef = 0.1;
  double scale_rate = 0.01;

  // policy and prior heads: log-std is tanh-clamped into [log_std_min, log_std_max]
  double log_std_min = std::log(0.05);
  double log_std_max = std::log(2.0);

  // policy regularization
  KlWeight lambda = KlWeight::finite(1.0);
  PriorMode prior_mode = PriorMode::ReverseKl;
  int reanalyze_batch = 20;
  int reanalyze_interval = 10;

  // io
  std::string metrics_path;
  std::string checkpoint_path;
  long checkpoint_every = 0;  // 0 = only at the end (when a path is set)

  ModelDims model_dims(int obs_dim, int action_dim) const {
    ModelDims d;
    d.obs_dim = obs_dim;
    d.action_dim = action_dim;
    d.latent_dim = latent_dim;
    d.simnorm_dim = simnorm_dim;
    d.enc_dim = enc_dim;
    d.num_enc_layers = num_enc_layers;
    d.mlp_dim = mlp_dim;
    d.num_q = num_q;
    d.grid = BinGrid{num_bins, vmin, vmax};
    d.dropout = dropout;
    return d;
  }

  PlanConfig plan_config(bool use_mean) const {
    PlanConfig p;
    p.horizon = horizon;
    p.iterations = iterations;
    p.population = population;
    p.policy_samples = policy_samples;
    p.elites = elites;
    p.temperature = temperature;
    p.min_std = min_std;
    p.max_std = max_std;
    p.discount = discount;
    p.use_mean = use_mean;
    return p;
  }

  WorldModelLossConfig wm_loss_config() const {
    return {rho, consistency_coef, reward_coef, value_coef, discount};
  }

  PolicyLossConfig policy_loss_config() const { return {lambda, entropy_coef, rho}; }

  void validate() const;
};

namespace detail {

struct ConfigField {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* b = text.data();
  const char* e = text.data() + text.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw ConfigError("config key '" + key + "': malformed value '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "': malformed boolean '" + text + "'");
}

template <class T>
ConfigField num(std::string key, T TrainConfig::*m) {
  return {key, [m](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*m);
            else return std::to_string(c.*m);
          },
          [m, key](TrainConfig& c, const std::string& s) { c.*m = parse_number<T>(key, s); }};
}

inline ConfigField flag(std::string key, bool TrainConfig::*m) {
  return {key, [m](const TrainConfig& c) { return std::string(c.*m ? "true" : "false"); },
          [m, key](TrainConfig& c, const std::string& s) { c.*m = parse_bool(key, s); }};
}

inline ConfigField text(std::string key, std::string TrainConfig::*m) {
  return {key, [m](const TrainConfig& c) { return c.*m; }, [m](TrainConfig& c, const std::string& s) { c.*m = s; }};
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      text("env.name", &TrainConfig::env_name),
      num("seed", &TrainConfig::seed),
      num("total_steps", &TrainConfig::total_steps),
      num("seeding_steps", &TrainConfig::seeding_steps),
      num("update_every", &TrainConfig::update_every),
      num("replay.capacity", &TrainConfig::replay_capacity),
      num("batch_size", &TrainConfig::batch_size),
      num("optim.lr", &TrainConfig::lr),
      num("optim.grad_clip", &TrainConfig::grad_clip),
      num("optim.beta1", &TrainConfig::adam_beta1),
      num("optim.beta2", &TrainConfig::adam_beta2),
      num("model.enc_dim", &TrainConfig::enc_dim),
      num("model.num_enc_layers", &TrainConfig::num_enc_layers),
      num("model.latent_dim", &TrainConfig::latent_dim),
      num("model.mlp_dim", &TrainConfig::mlp_dim),
      num("model.simnorm_dim", &TrainConfig::simnorm_dim),
      num("model.dropout", &TrainConfig::dropout),
      num("model.num_q", &TrainConfig::num_q),
      num("model.num_bins", &TrainConfig::num_bins),
      num("model.vmin", &TrainConfig::vmin),
      num("model.vmax", &TrainConfig::vmax),
      num("planner.horizon", &TrainConfig::horizon),
      num("planner.iterations", &TrainConfig::iterations),
      num("planner.population", &TrainConfig::population),
      num("planner.policy_samples", &TrainConfig::policy_samples),
      num("planner.elites", &TrainConfig::elites),
      num("planner.min_std", &TrainConfig::min_std),
      num("planner.max_std", &TrainConfig::max_std),
      num("planner.temperature", &TrainConfig::temperature),
      flag("planner.train_use_mean", &TrainConfig::train_use_mean),
      flag("planner.eval_use_mean", &TrainConfig::eval_use_mean),
      num("loss.discount", &TrainConfig::discount),
      num("loss.rho", &TrainConfig::rho),
      num("loss.consistency_coef", &TrainConfig::consistency_coef),
      num("loss.reward_coef", &TrainConfig::reward_coef),
      num("loss.value_coef", &TrainConfig::value_coef),
      num("loss.entropy_coef", &TrainConfig::entropy_coef),
      num("loss.tau", &TrainConfig::tau),
      num("loss.biased_value_coef", &TrainConfig::biased_value_coef),
      num("loss.scale_rate", &TrainConfig::scale_rate),
      num("policy.log_std_min", &TrainConfig::log_std_min),
      num("policy.log_std_max", &TrainConfig::log_std_max),
      {"lambda", [](const TrainConfig& c) { return c.lambda.str(); },
       [](TrainConfig& c, const std::string& s) {
         try {
           c.lambda = KlWeight::parse(s);
         } catch (const std::exception&) {
           throw ConfigError("config key 'lambda': malformed value '" + s + "'");
         }
       }},
      {"prior.mode", [](const TrainConfig& c) { return to_string(c.prior_mode); },
       [](TrainConfig& c, const std::string& s) {
         try {
           c.prior_mode = parse_prior_mode(s);
         } catch (const std::exception&) {
           throw ConfigError("config key 'prior.mode': unknown value '" + s + "'");
         }
       }},
      num("reanalyze.batch", &TrainConfig::reanalyze_batch),
      num("reanalyze.interval", &TrainConfig::reanalyze_interval),
      text("io.metrics", &TrainConfig::metrics_path),
      text("io.checkpoint", &TrainConfig::checkpoint_path),
      num("io.checkpoint_every", &TrainConfig::checkpoint_every),
  };
  return fields;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : detail::config_fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

inline std::string get_config_value(const TrainConfig& cfg, const std::string& key) {
  for (const auto& f : detail::config_fields())
    if (f.key == key) return f.get(cfg);
  throw ConfigError("unknown config key '" + key + "'");
}

/// Applies one `key=value` override.
inline void apply_override(TrainConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_config_value(cfg, detail::trim(std::string_view(assignment).substr(0, eq)),
                   detail::trim(std::string_view(assignment).substr(eq + 1)));
}

inline void apply_config_text(TrainConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.find('=') == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_override(cfg, t);
  }
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  TrainConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

/// Every key in declaration order; parsing the dump restores the config.
inline std::string dump_config(const TrainConfig& cfg) {
  std::string out;
  for (const auto& f : detail::config_fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

inline void TrainConfig::validate() const {
  auto need = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string("config key '") + key + "': " + what);
  };
  need(env_name == "pendulum" || env_name == "pointmass", "env.name", "expected pendulum or pointmass");
  need(total_steps >= 0, "total_steps", "must be >= 0");
  need(seeding_steps >= 0, "seeding_steps", "must be >= 0");
  need(update_every >= 1, "update_every", "must be >= 1");
  need(replay_capacity >= 1, "replay.capacity", "must be >= 1");
  need(batch_size >= 1, "batch_size", "must be >= 1");
  need(lr > 0.0, "optim.lr", "must be positive");
  need(grad_clip > 0.0, "optim.grad_clip", "must be positive");
  need(latent_dim % simnorm_dim == 0, "model.latent_dim", "must be a multiple of model.simnorm_dim");
  need(num_q >= 2, "model.num_q", "must be >= 2");
  need(num_bins >= 2 && vmin < vmax, "model.num_bins", "needs >= 2 bins and vmin < vmax");
  need(tau > 0.0 && tau <= 1.0, "loss.tau", "must be in (0, 1]");
  need(scale_rate > 0.0 && scale_rate <= 1.0, "loss.scale_rate", "must be in (0, 1]");
  need(log_std_min < log_std_max, "policy.log_std_min", "must be below policy.log_std_max");
  need(reanalyze_interval >= 1, "reanalyze.interval", "must be >= 1");
  need(reanalyze_batch >= 0, "reanalyze.batch", "must be >= 0");
  try {
    plan_config(false).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("planner config: ") + e.what());
  }
}

}  // namespace pompc
