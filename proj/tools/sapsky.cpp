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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sapsky/config.hpp"
#include "sapsky/harness.hpp"
#include "sapsky/verify.hpp"

namespace {

using namespace sapsky;

/// Output location: --out beats SAPSKY_OUTPUT_DIR beats the working
/// directory. Created on demand.
std::filesystem::path resolve_output_dir(const std::string& flag) {
  std::filesystem::path dir = ".";
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* env = std::getenv("SAPSKY_OUTPUT_DIR")) {
    if (*env) dir = env;
  }
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig load_config_checked(const std::string& path) {
  ExperimentConfig cfg = load_config_file(path);
  std::fprintf(stderr, "sapsky: config %s (hash %s, seed %llu)\n", path.c_str(),
               config_hash(cfg).c_str(), static_cast<unsigned long long>(cfg.seed));
  return cfg;
}

/// Streams run against the full simulated system; the synthetic scenario
/// exists only to train and inspect the agent in closed form.
void require_stream_scenario(const ExperimentConfig& cfg, const char* command) {
  if (cfg.scenario == Scenario::synthetic_convex)
    throw std::runtime_error(std::string(command) +
                             ": the synthetic_convex scenario has no stream to run; "
                             "use the train subcommand for it");
}

Policy make_policy(const ExperimentConfig& cfg, PolicyKind kind,
                   const std::string& checkpoint) {
  switch (kind) {
    case PolicyKind::no_filtering:
      return Policy::no_filtering(cfg.k_nodes, cfg.alpha_min);
    case PolicyKind::fixed_threshold:
      return Policy::fixed_threshold(cfg.k_nodes, cfg.fixed_alpha);
    case PolicyKind::sa_psky:
      break;
  }
  if (checkpoint.empty())
    throw std::runtime_error("policy sa_psky needs --checkpoint <path>");
  std::ifstream in(checkpoint);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + checkpoint + "'");
  double lo = 0.0, hi = 0.0;
  Mlp actor = DdpgAgent::load_actor(in, &lo, &hi);
  Policy policy = Policy::sa_psky(std::move(actor), lo, hi);
  if (policy.k_nodes() != cfg.k_nodes)
    throw std::runtime_error("checkpoint drives " + std::to_string(policy.k_nodes()) +
                             " thresholds but the config has " +
                             std::to_string(cfg.k_nodes) + " nodes");
  return policy;
}

int run_train(const std::string& config_path, const std::string& out_flag,
              bool deterministic) {
  const ExperimentConfig cfg = load_config_checked(config_path);
  const std::filesystem::path dir = resolve_output_dir(out_flag);

  // The synthetic scenario never touches the simulator, so skip the
  // normalization profiling runs it would trigger.
  const EnvConfig env_cfg = cfg.scenario == Scenario::synthetic_convex
                                ? ExperimentConfig::make_env_config_unchecked(cfg)
                                : resolve_env_config(cfg);
  const auto env = make_training_environment(cfg, env_cfg);
  DdpgAgent agent(env->state_width(), env->action_width(),
                  ExperimentConfig::make_agent_config(cfg));

  const int report_every = std::max(1, cfg.episodes / 10);
  const std::vector<EpisodeLog> log =
      agent.train(*env, cfg.episodes, [&](const EpisodeLog& ep) {
        if (ep.episode % report_every == 0 || ep.episode + 1 == cfg.episodes)
          std::fprintf(stderr,
                       "sapsky: episode %4d  return %10.4f  critic loss %8.5f  "
                       "mean alpha %6.4f  sigma %6.4f\n",
                       ep.episode, ep.undiscounted_return, ep.mean_critic_loss,
                       ep.mean_alpha, ep.sigma_ou);
      });

  const std::filesystem::path log_path = dir / "training_log.csv";
  write_training_log(log_path.string(), log, config_hash(cfg), cfg.seed, deterministic);

  const std::filesystem::path ckpt_path =
      dir / ("checkpoint_" + std::string(to_string(cfg.scenario)) + ".txt");
  std::ofstream ckpt(ckpt_path);
  if (!ckpt) throw std::runtime_error("cannot write checkpoint '" + ckpt_path.string() + "'");
  agent.save(ckpt);

  std::printf("trained %d episodes\n", cfg.episodes);
  if (!log.empty())
    std::printf("final return %.6f (episode %d)\n", log.back().undiscounted_return,
                log.back().episode);
  std::printf("training log: %s\ncheckpoint: %s\n", log_path.string().c_str(),
              ckpt_path.string().c_str());
  return 0;
}

int run_eval(const std::string& config_path, const std::string& policy_name,
             const std::string& checkpoint, const std::string& out_flag,
             bool deterministic, bool dump_objects) {
  const ExperimentConfig cfg = load_config_checked(config_path);
  require_stream_scenario(cfg, "eval");
  const std::filesystem::path dir = resolve_output_dir(out_flag);
  const PolicyKind kind = parse_policy_kind(policy_name);
  Policy policy = make_policy(cfg, kind, checkpoint);

  const EnvConfig env_cfg = resolve_env_config(cfg);
  std::unique_ptr<MetricsWriter> trace;
  std::filesystem::path metrics_path;
  if (cfg.trace) {
    metrics_path = dir / ("metrics_" + std::string(to_string(cfg.scenario)) + ".csv");
    trace = std::make_unique<MetricsWriter>(metrics_path.string(), metrics_header(),
                                            deterministic);
  }

  std::vector<ScoredObject> skyline;
  std::vector<UncertainObject> objects;
  const PolicyEvaluation eval =
      evaluate_policy(cfg, env_cfg, policy, trace.get(), &skyline,
                      dump_objects ? &objects : nullptr);
  if (trace) trace->flush();

  const std::filesystem::path report_path =
      dir / ("report_" + std::string(to_string(kind)) + ".csv");
  write_report_csv(report_path.string(), eval, deterministic);

  const std::filesystem::path skyline_path =
      dir / ("skyline_" + std::string(to_string(kind)) + ".csv");
  {
    std::ofstream out(skyline_path);
    if (!out)
      throw std::runtime_error("cannot write skyline dump '" + skyline_path.string() + "'");
    write_skyline_csv(out, skyline);
  }

  std::printf("policy %s over %d seeded runs (seed %llu..)\n", policy.name(),
              cfg.eval_repeats, static_cast<unsigned long long>(cfg.seed));
  std::printf("objects generated %lld, transmitted %lld (mean per run)\n",
              static_cast<long long>(eval.mean.objects_generated),
              static_cast<long long>(eval.mean.objects_transmitted));
  std::printf("e2e %.6f s  (comp %.6f + trans %.6f + cloud %.6f); unstable steps %lld\n",
              eval.mean.e2e_seconds, eval.mean.comp_parallel_seconds,
              eval.mean.trans_seconds, eval.mean.cloud_queue_seconds,
              static_cast<long long>(eval.mean.unstable_steps));
  std::printf("report: %s\nskyline (%zu rows): %s\n", report_path.string().c_str(),
              skyline.size(), skyline_path.string().c_str());
  if (trace) std::printf("metrics: %s\n", metrics_path.string().c_str());

  if (dump_objects) {
    const std::filesystem::path objects_path =
        dir / ("objects_" + std::string(to_string(cfg.scenario)) + ".csv");
    std::ofstream out(objects_path);
    if (!out)
      throw std::runtime_error("cannot write object dump '" + objects_path.string() + "'");
    write_objects_csv(out, objects);
    std::printf("objects (%zu): %s\n", objects.size(), objects_path.string().c_str());
  }
  return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& axis_name,
                  const std::string& checkpoint, const std::string& out_flag,
                  bool deterministic) {
  const ExperimentConfig cfg = load_config_checked(config_path);
  require_stream_scenario(cfg, "sweep");
  if (axis_name != "m" && axis_name != "d")
    throw std::runtime_error("sweep: --axis must be m or d");
  const char axis = axis_name[0];
  const std::filesystem::path dir = resolve_output_dir(out_flag);
  const std::vector<int>& values = axis == 'm' ? cfg.sweep_m_values : cfg.sweep_d_values;

  const EnvConfig env_cfg = resolve_env_config(cfg);
  Policy fixed = Policy::fixed_threshold(cfg.k_nodes, cfg.fixed_alpha);
  std::vector<Policy> extra;
  if (!checkpoint.empty()) extra.push_back(make_policy(cfg, PolicyKind::sa_psky, checkpoint));
  std::vector<Policy*> policies = {&fixed};
  for (Policy& p : extra) policies.push_back(&p);

  const std::vector<SweepRow> rows = run_sweep(cfg, env_cfg, axis, values, policies);
  const std::filesystem::path path =
      dir / ("sweep_" + axis_name + ".csv");
  write_sweep_csv(path.string(), rows, deterministic);

  for (const SweepRow& row : rows)
    std::printf("%c=%d  %-15s comp %.6f s  trans %.6f s  e2e %.6f s  sent %lld\n", row.axis,
                row.value, row.report.policy.c_str(), row.report.comp_parallel_seconds,
                row.report.trans_seconds, row.report.e2e_seconds,
                static_cast<long long>(row.report.objects_transmitted));
  std::printf("sweep: %s\n", path.string().c_str());
  return 0;
}

int run_verify(const std::string& config_path, const std::string& batteries_csv,
               bool batteries_given) {
  const ExperimentConfig cfg = load_config_checked(config_path);
  std::vector<std::string> selection;
  if (!batteries_given) {
    selection = all_battery_names();
  } else {
    std::istringstream in(batteries_csv);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto first = item.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      const auto last = item.find_last_not_of(" \t");
      selection.push_back(item.substr(first, last - first + 1));
    }
  }
  if (selection.empty()) {
    std::printf("no batteries selected: pass\n");
    return 0;
  }
  bool all_pass = true;
  for (const BatteryResult& res : run_verification(selection, cfg.seed)) {
    std::printf("%s: %s (%s)\n", res.name.c_str(), res.pass ? "PASS" : "FAIL",
                res.detail.c_str());
    all_pass = all_pass && res.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-threshold probabilistic skyline processing over simulated "
               "edge streams"};
  app.require_subcommand(1);

  std::string config_path, out_flag, policy_name, checkpoint, axis_name, batteries_csv;
  bool deterministic = false, dump_objects = false;

  CLI::App* train = app.add_subcommand("train", "Train the threshold agent");
  train->add_option("config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", out_flag, "output directory (default $SAPSKY_OUTPUT_DIR or .)");
  train->add_flag("--deterministic", deterministic, "suppress timestamp comments in CSVs");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a policy over seeded runs");
  eval->add_option("config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--policy", policy_name, "no_filtering | fixed_threshold | sa_psky")
      ->required();
  eval->add_option("--checkpoint", checkpoint, "trained agent checkpoint (for sa_psky)");
  eval->add_option("--out", out_flag, "output directory (default $SAPSKY_OUTPUT_DIR or .)");
  eval->add_flag("--deterministic", deterministic, "suppress timestamp comments in CSVs");
  eval->add_flag("--dump-objects", dump_objects, "also dump the generated object stream");

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep instance count or dimensionality");
  sweep->add_option("config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis_name, "m | d")->required();
  sweep->add_option("--checkpoint", checkpoint, "also sweep the trained policy");
  sweep->add_option("--out", out_flag, "output directory (default $SAPSKY_OUTPUT_DIR or .)");
  sweep->add_flag("--deterministic", deterministic, "suppress timestamp comments in CSVs");

  CLI::App* verify = app.add_subcommand("verify", "Run the verification batteries");
  verify->add_option("config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::Option* batteries_opt = verify->add_option(
      "--batteries", batteries_csv,
      "comma-separated subset of: skyline_oracle, monotonicity, mm1, gradients");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(config_path, out_flag, deterministic);
    if (*eval)
      return run_eval(config_path, policy_name, checkpoint, out_flag, deterministic,
                      dump_objects);
    if (*sweep)
      return run_sweep_cmd(config_path, axis_name, checkpoint, out_flag, deterministic);
    if (*verify) return run_verify(config_path, batteries_csv, batteries_opt->count() > 0);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sapsky: error: %s\n", e.what());
    return 2;
  }
  return 2;
}
