/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sapsky/data_gen.hpp"
#include "sapsky/ddpg.hpp"
#include "sapsky/env.hpp"
#include "sapsky/synthetic_env.hpp"

namespace sapsky {

enum class Scenario { default_run, sweep_m, sweep_d, synthetic_convex };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::default_run: return "default";
    case Scenario::sweep_m: return "sweep_m";
    case Scenario::sweep_d: return "sweep_d";
    case Scenario::synthetic_convex: return "synthetic_convex";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& name) {
  if (name == "default") return Scenario::default_run;
  if (name == "sweep_m") return Scenario::sweep_m;
  if (name == "sweep_d") return Scenario::sweep_d;
  if (name == "synthetic_convex") return Scenario::synthetic_convex;
  throw std::invalid_argument("config: unknown scenario '" + name +
                              "' (expected default, sweep_m, sweep_d or synthetic_convex)");
}

/// One flat experiment description: stream shape, cost constants, threshold
/// protocol, agent hyperparameters and orchestration knobs. Defaults are the
/// standard full-scale setup (50,000 objects over 5 nodes, 1 Kbit objects on
/// a 1 Mbps uplink, m = 3, d = 3, window capacity 500, fixed baseline
/// threshold 0.02); a config file only states deviations from it.
struct ExperimentConfig {
  // Data volume and topology.
  std::int64_t total_objects = 50000;
  int k_nodes = 5;
  int m = 3;  // instances per object
  int d = 3;  // dimensions per instance
  Distribution distribution = Distribution::independent;
  double arrival_rate = 2.0;  // objects per node per step
  double instance_spread = 0.05;
  double diagonal_noise = 0.10;
  bool random_instance_probs = false;
  double ghost_mass = 0.0;
  std::size_t w_max = 500;         // per-node sliding window capacity
  std::size_t broker_w_max = 500;  // broker-side window capacity
  double query_alpha = 0.02;       // broker's result threshold

  // Cost model constants. Zeros mark values resolved at run time: mu from
  // the 0.9-utilization rule, the normalization bounds from profiling.
  double kappa = 1e-7;
  double omega_bits = 1000.0;
  double bandwidth_bps = 1e6;
  double mu = 0.0;
  double w1 = 0.5;
  double w2 = 0.5;
  double c_max = 0.0;
  double l_max = 0.0;

  // Threshold bounds and episode protocol.
  double alpha_min = 0.001;
  double alpha_max = 0.9;
  double fixed_alpha = 0.02;
  double instability_penalty = 10.0;
  int t_max = 200;
  int warmup_steps = 10;
  int feature_horizon = 5;
  std::vector<std::pair<std::int64_t, double>> bandwidth_schedule;

  // Agent hyperparameters.
  std::vector<int> hidden = {400, 300, 200};
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t replay_capacity = 1000000;
  int batch_size = 128;
  int warmup_transitions = 256;
  double grad_clip = 1.0;
  bool use_adam = false;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_sigma_decay = 0.995;
  double ou_sigma_floor = 0.01;
  double per_exponent = 0.6;
  double per_beta0 = 0.4;
  double per_min_priority = 1e-3;
  std::int64_t per_beta_horizon = 100000;
  bool epsilon_greedy = false;
  double epsilon0 = 0.8;
  double epsilon_decay = 0.995;
  double epsilon_floor = 0.01;
  int episodes = 150;

  // Orchestration.
  Scenario scenario = Scenario::default_run;
  std::vector<int> sweep_m_values = {3, 5, 7, 9};
  std::vector<int> sweep_d_values = {3, 5, 7, 9};
  std::vector<int> randomize_m;  // per-episode training curriculum, empty = off
  std::vector<int> randomize_d;
  int eval_repeats = 5;
  bool desk_scale = false;  // divide volume and bandwidth by 10
  bool trace = true;        // per-step rows in the metrics CSV
  std::uint64_t seed = 1;

  void validate() const {
    if (total_objects < 0) throw std::invalid_argument("config: total_objects must be >= 0");
    if (k_nodes < 1) throw std::invalid_argument("config: k_nodes must be >= 1");
    if (m < 1) throw std::invalid_argument("config: m must be >= 1");
    if (d < 1) throw std::invalid_argument("config: d must be >= 1");
    if (!(arrival_rate > 0.0)) throw std::invalid_argument("config: arrival_rate must be > 0");
    if (w_max == 0 || broker_w_max == 0)
      throw std::invalid_argument("config: window capacities must be positive");
    if (!(query_alpha >= 0.0 && query_alpha <= 1.0))
      throw std::invalid_argument("config: query_alpha must be in [0, 1]");
    if (!(kappa > 0.0)) throw std::invalid_argument("config: kappa must be > 0");
    if (!(omega_bits > 0.0)) throw std::invalid_argument("config: omega_bits must be > 0");
    if (!(bandwidth_bps > 0.0)) throw std::invalid_argument("config: bandwidth_bps must be > 0");
    if (mu < 0.0) throw std::invalid_argument("config: mu must be >= 0 (0 = derive)");
    if (w1 < 0.0 || w2 < 0.0) throw std::invalid_argument("config: cost weights must be >= 0");
    if (c_max < 0.0 || l_max < 0.0)
      throw std::invalid_argument("config: normalization bounds must be >= 0 (0 = profile)");
    if (!(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max <= 1.0))
      throw std::invalid_argument("config: need 0 <= alpha_min < alpha_max <= 1");
    if (!(fixed_alpha >= 0.0 && fixed_alpha <= 1.0))
      throw std::invalid_argument("config: fixed_alpha must be in [0, 1]");
    if (eval_repeats < 1) throw std::invalid_argument("config: eval_repeats must be >= 1");
    if (episodes < 0) throw std::invalid_argument("config: episodes must be >= 0");
    for (int v : sweep_m_values)
      if (v < 1) throw std::invalid_argument("config: sweep_m_values entries must be >= 1");
    for (int v : sweep_d_values)
      if (v < 1) throw std::invalid_argument("config: sweep_d_values entries must be >= 1");
    // The remaining interdependent checks live with their owning configs.
    make_env_config_unchecked(*this).validate();
    make_agent_config(*this).validate();
  }

  // Defined after the free helpers below.
  static EnvConfig make_env_config_unchecked(const ExperimentConfig& cfg);
  static AgentConfig make_agent_config(const ExperimentConfig& cfg);
};

inline double effective_total_objects(const ExperimentConfig& cfg) {
  return cfg.desk_scale ? static_cast<double>(cfg.total_objects) / 10.0
                        : static_cast<double>(cfg.total_objects);
}

inline double effective_bandwidth(const ExperimentConfig& cfg) {
  return cfg.desk_scale ? cfg.bandwidth_bps / 10.0 : cfg.bandwidth_bps;
}

inline double resolved_mu(const ExperimentConfig& cfg) {
  // Service rate sized for 0.9 utilization when nothing is filtered.
  return cfg.mu > 0.0 ? cfg.mu : mu_for_target_rho(cfg.k_nodes, cfg.arrival_rate, 0.9);
}

inline StreamConfig make_stream_config(const ExperimentConfig& cfg) {
  StreamConfig s;
  s.distribution = cfg.distribution;
  s.instances_per_object = cfg.m;
  s.dims = cfg.d;
  s.arrival_rate = cfg.arrival_rate;
  s.instance_spread = cfg.instance_spread;
  s.diagonal_noise = cfg.diagonal_noise;
  s.random_instance_probs = cfg.random_instance_probs;
  s.ghost_mass = cfg.ghost_mass;
  s.seed = cfg.seed;
  return s;
}

/// Environment view of the experiment. Normalization bounds left at zero in
/// the experiment config appear here as placeholder ones; callers that need
/// calibrated values run resolve_env_config instead.
inline EnvConfig ExperimentConfig::make_env_config_unchecked(const ExperimentConfig& cfg) {
  EnvConfig env;
  env.k_nodes = cfg.k_nodes;
  env.stream = make_stream_config(cfg);
  env.window_capacity = cfg.w_max;
  env.broker_window_capacity = cfg.broker_w_max;
  env.query_alpha = cfg.query_alpha;
  env.cost.kappa = cfg.kappa;
  env.cost.omega_bits = cfg.omega_bits;
  env.cost.bandwidth_bps = effective_bandwidth(cfg);
  env.cost.mu = resolved_mu(cfg);
  env.cost.w1 = cfg.w1;
  env.cost.w2 = cfg.w2;
  env.cost.c_max = cfg.c_max > 0.0 ? cfg.c_max : 1.0;
  env.cost.l_max = cfg.l_max > 0.0 ? cfg.l_max : 1.0;
  env.alpha_min = cfg.alpha_min;
  env.alpha_max = cfg.alpha_max;
  env.instability_penalty = cfg.instability_penalty;
  env.t_max = cfg.t_max;
  env.warmup_steps = cfg.warmup_steps;
  env.feature_horizon = cfg.feature_horizon;
  env.bandwidth_schedule = cfg.bandwidth_schedule;
  env.episode_m_choices = cfg.randomize_m;
  env.episode_d_choices = cfg.randomize_d;
  return env;
}

/// Fully calibrated environment config: mu resolved, and any zero
/// normalization bound replaced by the profiled per-step maxima observed at
/// the threshold extremes. Profiling is seeded by the experiment seed, so
/// resolution is deterministic.
inline EnvConfig resolve_env_config(const ExperimentConfig& cfg) {
  EnvConfig env = ExperimentConfig::make_env_config_unchecked(cfg);
  if (cfg.c_max <= 0.0 || cfg.l_max <= 0.0) {
    const NormalizationProfile prof = profile_normalization(env, cfg.seed);
    if (cfg.c_max <= 0.0) env.cost.c_max = prof.c_max;
    if (cfg.l_max <= 0.0) env.cost.l_max = prof.l_max;
  }
  return env;
}

inline AgentConfig ExperimentConfig::make_agent_config(const ExperimentConfig& cfg) {
  AgentConfig a;
  a.hidden = cfg.hidden;
  a.lr_actor = cfg.lr_actor;
  a.lr_critic = cfg.lr_critic;
  a.gamma = cfg.gamma;
  a.tau = cfg.tau;
  a.replay_capacity = cfg.replay_capacity;
  a.batch_size = cfg.batch_size;
  a.warmup_transitions = cfg.warmup_transitions;
  a.grad_clip = cfg.grad_clip;
  a.use_adam = cfg.use_adam;
  a.ou_theta = cfg.ou_theta;
  a.ou_sigma = cfg.ou_sigma;
  a.ou_sigma_decay = cfg.ou_sigma_decay;
  a.ou_sigma_floor = cfg.ou_sigma_floor;
  a.per_exponent = cfg.per_exponent;
  a.per_beta0 = cfg.per_beta0;
  a.per_min_priority = cfg.per_min_priority;
  a.per_beta_horizon = cfg.per_beta_horizon;
  a.epsilon_greedy = cfg.epsilon_greedy;
  a.epsilon0 = cfg.epsilon0;
  a.epsilon_decay = cfg.epsilon_decay;
  a.epsilon_floor = cfg.epsilon_floor;
  if (cfg.scenario == Scenario::synthetic_convex) {
    const SyntheticParams p;
    a.alpha_min = p.alpha_min;
    a.alpha_max = p.alpha_max;
  } else {
    a.alpha_min = cfg.alpha_min;
    a.alpha_max = cfg.alpha_max;
  }
  a.seed = cfg.seed;
  return a;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value,
                                   const char* expected) {
  throw std::invalid_argument("config: bad value '" + value + "' for key '" + key +
                              "' (expected " + expected + ")");
}

inline double parse_double_value(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a real number");
  }
  if (used != value.size()) bad_value(key, value, "a real number");
  return out;
}

inline std::int64_t parse_int_value(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
  if (used != value.size()) bad_value(key, value, "an integer");
  return out;
}

inline bool parse_bool_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_int_value(key, trim(item))));
  return out;
}

inline std::vector<std::pair<std::int64_t, double>> parse_schedule(const std::string& key,
                                                                   const std::string& value) {
  std::vector<std::pair<std::int64_t, double>> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string entry = trim(item);
    const auto colon = entry.find(':');
    if (colon == std::string::npos) bad_value(key, value, "step:bits_per_second pairs");
    out.emplace_back(parse_int_value(key, trim(entry.substr(0, colon))),
                     parse_double_value(key, trim(entry.substr(colon + 1))));
  }
  return out;
}

inline Distribution parse_distribution_value(const std::string& key, const std::string& value) {
  if (value == "independent") return Distribution::independent;
  if (value == "correlated") return Distribution::correlated;
  if (value == "anti_correlated") return Distribution::anti_correlated;
  bad_value(key, value, "independent, correlated or anti_correlated");
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::string format_schedule(const std::vector<std::pair<std::int64_t, double>>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i].first) + ':' + format_double(v[i].second);
  }
  return out;
}

/// Applies one key/value pair; returns false for unknown keys.
inline bool apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  if (key == "total_objects") cfg.total_objects = parse_int_value(key, value);
  else if (key == "k_nodes") cfg.k_nodes = static_cast<int>(parse_int_value(key, value));
  else if (key == "m") cfg.m = static_cast<int>(parse_int_value(key, value));
  else if (key == "d") cfg.d = static_cast<int>(parse_int_value(key, value));
  else if (key == "distribution") cfg.distribution = parse_distribution_value(key, value);
  else if (key == "arrival_rate") cfg.arrival_rate = parse_double_value(key, value);
  else if (key == "instance_spread") cfg.instance_spread = parse_double_value(key, value);
  else if (key == "diagonal_noise") cfg.diagonal_noise = parse_double_value(key, value);
  else if (key == "random_instance_probs")
    cfg.random_instance_probs = parse_bool_value(key, value);
  else if (key == "ghost_mass") cfg.ghost_mass = parse_double_value(key, value);
  else if (key == "w_max")
    cfg.w_max = static_cast<std::size_t>(parse_int_value(key, value));
  else if (key == "broker_w_max")
    cfg.broker_w_max = static_cast<std::size_t>(parse_int_value(key, value));
  else if (key == "query_alpha") cfg.query_alpha = parse_double_value(key, value);
  else if (key == "kappa") cfg.kappa = parse_double_value(key, value);
  else if (key == "omega_bits") cfg.omega_bits = parse_double_value(key, value);
  else if (key == "bandwidth_bps") cfg.bandwidth_bps = parse_double_value(key, value);
  else if (key == "mu") cfg.mu = parse_double_value(key, value);
  else if (key == "w1") cfg.w1 = parse_double_value(key, value);
  else if (key == "w2") cfg.w2 = parse_double_value(key, value);
  else if (key == "c_max") cfg.c_max = parse_double_value(key, value);
  else if (key == "l_max") cfg.l_max = parse_double_value(key, value);
  else if (key == "alpha_min") cfg.alpha_min = parse_double_value(key, value);
  else if (key == "alpha_max") cfg.alpha_max = parse_double_value(key, value);
  else if (key == "fixed_alpha") cfg.fixed_alpha = parse_double_value(key, value);
  else if (key == "instability_penalty")
    cfg.instability_penalty = parse_double_value(key, value);
  else if (key == "t_max") cfg.t_max = static_cast<int>(parse_int_value(key, value));
  else if (key == "warmup_steps")
    cfg.warmup_steps = static_cast<int>(parse_int_value(key, value));
  else if (key == "feature_horizon")
    cfg.feature_horizon = static_cast<int>(parse_int_value(key, value));
  else if (key == "bandwidth_schedule") cfg.bandwidth_schedule = parse_schedule(key, value);
  else if (key == "hidden") cfg.hidden = parse_int_list(key, value);
  else if (key == "lr_actor") cfg.lr_actor = parse_double_value(key, value);
  else if (key == "lr_critic") cfg.lr_critic = parse_double_value(key, value);
  else if (key == "gamma") cfg.gamma = parse_double_value(key, value);
  else if (key == "tau") cfg.tau = parse_double_value(key, value);
  else if (key == "replay_capacity")
    cfg.replay_capacity = static_cast<std::size_t>(parse_int_value(key, value));
  else if (key == "batch_size")
    cfg.batch_size = static_cast<int>(parse_int_value(key, value));
  else if (key == "warmup_transitions")
    cfg.warmup_transitions = static_cast<int>(parse_int_value(key, value));
  else if (key == "grad_clip") cfg.grad_clip = parse_double_value(key, value);
  else if (key == "use_adam") cfg.use_adam = parse_bool_value(key, value);
  else if (key == "ou_theta") cfg.ou_theta = parse_double_value(key, value);
  else if (key == "ou_sigma") cfg.ou_sigma = parse_double_value(key, value);
  else if (key == "ou_sigma_decay") cfg.ou_sigma_decay = parse_double_value(key, value);
  else if (key == "ou_sigma_floor") cfg.ou_sigma_floor = parse_double_value(key, value);
  else if (key == "per_exponent") cfg.per_exponent = parse_double_value(key, value);
  else if (key == "per_beta0") cfg.per_beta0 = parse_double_value(key, value);
  else if (key == "per_min_priority")
    cfg.per_min_priority = parse_double_value(key, value);
  else if (key == "per_beta_horizon") cfg.per_beta_horizon = parse_int_value(key, value);
  else if (key == "epsilon_greedy") cfg.epsilon_greedy = parse_bool_value(key, value);
  else if (key == "epsilon0") cfg.epsilon0 = parse_double_value(key, value);
  else if (key == "epsilon_decay") cfg.epsilon_decay = parse_double_value(key, value);
  else if (key == "epsilon_floor") cfg.epsilon_floor = parse_double_value(key, value);
  else if (key == "episodes") cfg.episodes = static_cast<int>(parse_int_value(key, value));
  else if (key == "scenario") cfg.scenario = parse_scenario(value);
  else if (key == "sweep_m_values") cfg.sweep_m_values = parse_int_list(key, value);
  else if (key == "sweep_d_values") cfg.sweep_d_values = parse_int_list(key, value);
  else if (key == "randomize_m") cfg.randomize_m = parse_int_list(key, value);
  else if (key == "randomize_d") cfg.randomize_d = parse_int_list(key, value);
  else if (key == "eval_repeats")
    cfg.eval_repeats = static_cast<int>(parse_int_value(key, value));
  else if (key == "desk_scale") cfg.desk_scale = parse_bool_value(key, value);
  else if (key == "trace") cfg.trace = parse_bool_value(key, value);
  else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(parse_int_value(key, value));
  else return false;
  return true;
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment, blank lines are
/// skipped. Unknown keys and malformed values fail with the offending key
/// and line number. An empty stream yields the full default configuration.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string entry = detail::trim(line);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not a key = value pair: '" + entry + "'");
    const std::string key = detail::trim(entry.substr(0, eq));
    const std::string value = detail::trim(entry.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key on line " + std::to_string(line_no));
    if (!detail::apply_config_entry(cfg, key, value))
      throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                  std::to_string(line_no));
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  try {
    return parse_config(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

/// Canonical single-line-per-key rendering of every field, used both as the
/// reproducibility record and as the hash input. Parsing it back yields an
/// equal config.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  using detail::format_double;
  std::string out;
  const auto kv = [&out](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  kv("total_objects", std::to_string(cfg.total_objects));
  kv("k_nodes", std::to_string(cfg.k_nodes));
  kv("m", std::to_string(cfg.m));
  kv("d", std::to_string(cfg.d));
  kv("distribution", to_string(cfg.distribution));
  kv("arrival_rate", format_double(cfg.arrival_rate));
  kv("instance_spread", format_double(cfg.instance_spread));
  kv("diagonal_noise", format_double(cfg.diagonal_noise));
  kv("random_instance_probs", cfg.random_instance_probs ? "true" : "false");
  kv("ghost_mass", format_double(cfg.ghost_mass));
  kv("w_max", std::to_string(cfg.w_max));
  kv("broker_w_max", std::to_string(cfg.broker_w_max));
  kv("query_alpha", format_double(cfg.query_alpha));
  kv("kappa", format_double(cfg.kappa));
  kv("omega_bits", format_double(cfg.omega_bits));
  kv("bandwidth_bps", format_double(cfg.bandwidth_bps));
  kv("mu", format_double(cfg.mu));
  kv("w1", format_double(cfg.w1));
  kv("w2", format_double(cfg.w2));
  kv("c_max", format_double(cfg.c_max));
  kv("l_max", format_double(cfg.l_max));
  kv("alpha_min", format_double(cfg.alpha_min));
  kv("alpha_max", format_double(cfg.alpha_max));
  kv("fixed_alpha", format_double(cfg.fixed_alpha));
  kv("instability_penalty", format_double(cfg.instability_penalty));
  kv("t_max", std::to_string(cfg.t_max));
  kv("warmup_steps", std::to_string(cfg.warmup_steps));
  kv("feature_horizon", std::to_string(cfg.feature_horizon));
  kv("bandwidth_schedule", detail::format_schedule(cfg.bandwidth_schedule));
  kv("hidden", detail::format_int_list(cfg.hidden));
  kv("lr_actor", format_double(cfg.lr_actor));
  kv("lr_critic", format_double(cfg.lr_critic));
  kv("gamma", format_double(cfg.gamma));
  kv("tau", format_double(cfg.tau));
  kv("replay_capacity", std::to_string(cfg.replay_capacity));
  kv("batch_size", std::to_string(cfg.batch_size));
  kv("warmup_transitions", std::to_string(cfg.warmup_transitions));
  kv("grad_clip", format_double(cfg.grad_clip));
  kv("use_adam", cfg.use_adam ? "true" : "false");
  kv("ou_theta", format_double(cfg.ou_theta));
  kv("ou_sigma", format_double(cfg.ou_sigma));
  kv("ou_sigma_decay", format_double(cfg.ou_sigma_decay));
  kv("ou_sigma_floor", format_double(cfg.ou_sigma_floor));
  kv("per_exponent", format_double(cfg.per_exponent));
  kv("per_beta0", format_double(cfg.per_beta0));
  kv("per_min_priority", format_double(cfg.per_min_priority));
  kv("per_beta_horizon", std::to_string(cfg.per_beta_horizon));
  kv("epsilon_greedy", cfg.epsilon_greedy ? "true" : "false");
  kv("epsilon0", format_double(cfg.epsilon0));
  kv("epsilon_decay", format_double(cfg.epsilon_decay));
  kv("epsilon_floor", format_double(cfg.epsilon_floor));
  kv("episodes", std::to_string(cfg.episodes));
  kv("scenario", to_string(cfg.scenario));
  kv("sweep_m_values", detail::format_int_list(cfg.sweep_m_values));
  kv("sweep_d_values", detail::format_int_list(cfg.sweep_d_values));
  kv("randomize_m", detail::format_int_list(cfg.randomize_m));
  kv("randomize_d", detail::format_int_list(cfg.randomize_d));
  kv("eval_repeats", std::to_string(cfg.eval_repeats));
  kv("desk_scale", cfg.desk_scale ? "true" : "false");
  kv("trace", cfg.trace ? "true" : "false");
  kv("seed", std::to_string(cfg.seed));
  return out;
}

/// FNV-1a over the canonical rendering, as a 16-digit hex tag carried on
/// every emitted CSV row.
inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sapsky
