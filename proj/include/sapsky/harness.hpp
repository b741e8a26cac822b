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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "sapsky/config.hpp"
#include "sapsky/ddpg.hpp"
#include "sapsky/env.hpp"
#include "sapsky/policies.hpp"
#include "sapsky/synthetic_env.hpp"

namespace sapsky {

/// End-of-run accounting for one policy over one seeded stream. Times are
/// the component sums over all steps: parallel computation takes the
/// per-step maximum across nodes (nodes filter concurrently), summed
/// computation charges every node, and the end-to-end figure composes
/// parallel computation + transmissions + cloud sojourns step by step.
struct RunReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::int64_t steps = 0;
  std::int64_t objects_generated = 0;
  std::int64_t objects_transmitted = 0;
  std::uint64_t edge_comparisons = 0;
  std::uint64_t cloud_comparisons = 0;
  double trans_seconds = 0.0;
  double comp_parallel_seconds = 0.0;
  double comp_sum_seconds = 0.0;
  double cloud_comp_seconds = 0.0;  // broker's measured dominance work
  double cloud_queue_seconds = 0.0;
  double e2e_seconds = 0.0;
  std::int64_t unstable_steps = 0;
  double mean_selectivity = 0.0;
  std::int64_t final_skyline_size = 0;
};

namespace detail {

inline std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Line-oriented CSV sink. Every file starts with an optional generation
/// timestamp comment (suppressed in deterministic mode so identical runs
/// produce identical bytes) followed by the header row.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, const std::string& header, bool deterministic)
      : out_(path) {
    if (!out_) throw std::runtime_error("metrics: cannot open '" + path + "' for writing");
    if (!deterministic) {
      const std::time_t now = std::time(nullptr);
      char stamp[64];
      std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      out_ << "# generated " << stamp << '\n';
    }
    out_ << header << '\n';
  }

  void row(const std::string& line) { out_ << line << '\n'; }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

inline const char* metrics_header() {
  return "config_hash,seed,policy,step,mean_alpha,arrivals,transmitted,candidates,"
         "comp_max_seconds,comp_sum_seconds,trans_seconds,cloud_seconds,rho,stable,"
         "l_sys_seconds,cost";
}

/// Streams the configured data volume through the simulated system under
/// one policy and accumulates the latency decomposition. The object quota is
/// split across nodes; the run ends when every node has produced its share
/// (a zero-object config returns an all-zero report).
inline RunReport run_experiment(const ExperimentConfig& cfg, EnvConfig env_cfg,
                                Policy& policy, std::uint64_t seed,
                                MetricsWriter* trace = nullptr,
                                std::vector<ScoredObject>* skyline_out = nullptr,
                                std::vector<UncertainObject>* objects_out = nullptr) {
  if (policy.k_nodes() != env_cfg.k_nodes)
    throw std::invalid_argument("run_experiment: policy node count mismatch");
  RunReport rep;
  rep.policy = policy.name();
  rep.seed = seed;
  rep.config_hash = config_hash(cfg);
  if (skyline_out) skyline_out->clear();
  if (objects_out) objects_out->clear();

  const std::int64_t quota =
      static_cast<std::int64_t>(std::llround(effective_total_objects(cfg)));
  if (quota == 0) return rep;
  env_cfg.object_quota = quota;
  env_cfg.measure_broker = true;
  EdgeCloudSim sim(env_cfg, seed);
  if (objects_out)
    sim.set_generation_observer(
        [objects_out](const UncertainObject& obj) { objects_out->push_back(obj); });

  // Poisson arrivals drain the quota in about quota/(K*lambda) steps; the
  // guard only exists to bound a mis-configured run.
  const std::int64_t expected_steps = static_cast<std::int64_t>(
      static_cast<double>(quota) / (env_cfg.k_nodes * env_cfg.stream.arrival_rate));
  const std::int64_t max_steps = 4 * expected_steps + 200;

  double selectivity_sum = 0.0;
  std::int64_t selectivity_count = 0;
  while (!sim.quota_exhausted() && rep.steps < max_steps) {
    const std::vector<double> alphas = policy.decide(sim.state_vector());
    const StepRecord rec = sim.advance(alphas, policy.passthrough());
    ++rep.steps;

    double comp_max = 0.0, comp_sum = 0.0, trans_sum = 0.0;
    std::int64_t arrivals = 0, transmitted = 0, candidates = 0;
    for (int i = 0; i < env_cfg.k_nodes; ++i) {
      comp_max = std::max(comp_max, rec.costs.comp_seconds[i]);
      comp_sum += rec.costs.comp_seconds[i];
      trans_sum += rec.costs.trans_seconds[i];
      arrivals += rec.arrivals[i];
      transmitted += rec.transmitted[i];
      candidates += static_cast<std::int64_t>(rec.candidate_counts[i]);
      rep.edge_comparisons += rec.edge_comparisons[i];
      selectivity_sum += rec.costs.selectivity[i];
      ++selectivity_count;
    }
    rep.objects_transmitted += transmitted;
    rep.cloud_comparisons += rec.cloud_comparisons;
    rep.trans_seconds += trans_sum;
    rep.comp_parallel_seconds += comp_max;
    rep.comp_sum_seconds += comp_sum;
    rep.cloud_comp_seconds +=
        comp_time_measured(env_cfg.cost.kappa, rec.cloud_comparisons, sim.config().stream.dims);
    rep.cloud_queue_seconds += rec.costs.cloud_seconds;
    rep.e2e_seconds += rec.costs.l_sys;
    if (!rec.costs.stable) ++rep.unstable_steps;

    if (trace) {
      double mean_alpha = 0.0;
      for (double a : alphas) mean_alpha += a;
      mean_alpha /= alphas.size();
      std::string line = rep.config_hash;
      line += ',' + std::to_string(seed);
      line += ',';
      line += policy.name();
      line += ',' + std::to_string(rec.step);
      line += ',' + detail::csv_double(mean_alpha);
      line += ',' + std::to_string(arrivals);
      line += ',' + std::to_string(transmitted);
      line += ',' + std::to_string(candidates);
      line += ',' + detail::csv_double(comp_max);
      line += ',' + detail::csv_double(comp_sum);
      line += ',' + detail::csv_double(trans_sum);
      line += ',' + detail::csv_double(rec.costs.cloud_seconds);
      line += ',' + detail::csv_double(rec.costs.rho);
      line += ',';
      line += rec.costs.stable ? "1" : "0";
      line += ',' + detail::csv_double(rec.costs.l_sys);
      line += ',' + detail::csv_double(rec.costs.cost);
      trace->row(line);
    }
  }
  rep.objects_generated = sim.total_generated();
  rep.mean_selectivity = selectivity_count ? selectivity_sum / selectivity_count : 0.0;
  std::vector<ScoredObject> skyline = sim.global_skyline();
  rep.final_skyline_size = static_cast<std::int64_t>(skyline.size());
  if (skyline_out) *skyline_out = std::move(skyline);
  return rep;
}

/// Per-policy evaluation across seeded repeats plus elementwise mean and
/// sample standard deviation reports.
struct PolicyEvaluation {
  std::vector<RunReport> runs;
  RunReport mean;
  RunReport stddev;
};

inline PolicyEvaluation evaluate_policy(const ExperimentConfig& cfg, const EnvConfig& env_cfg,
                                        Policy& policy, MetricsWriter* trace = nullptr,
                                        std::vector<ScoredObject>* skyline_out = nullptr,
                                        std::vector<UncertainObject>* objects_out = nullptr) {
  PolicyEvaluation eval;
  for (int r = 0; r < cfg.eval_repeats; ++r)
    eval.runs.push_back(run_experiment(cfg, env_cfg, policy, cfg.seed + r, trace,
                                       r == 0 ? skyline_out : nullptr,
                                       r == 0 ? objects_out : nullptr));

  const auto fold = [&eval](auto field) {
    double mean = 0.0;
    for (const RunReport& rep : eval.runs) mean += static_cast<double>(rep.*field);
    mean /= eval.runs.size();
    double var = 0.0;
    for (const RunReport& rep : eval.runs) {
      const double dev = static_cast<double>(rep.*field) - mean;
      var += dev * dev;
    }
    var = eval.runs.size() > 1 ? var / (eval.runs.size() - 1) : 0.0;
    return std::pair<double, double>(mean, std::sqrt(var));
  };

  eval.mean.policy = eval.stddev.policy = policy.name();
  eval.mean.config_hash = eval.stddev.config_hash = eval.runs.front().config_hash;
  const auto assign = [&fold](auto field, RunReport& mean, RunReport& stddev) {
    const auto [m, s] = fold(field);
    mean.*field = static_cast<std::remove_reference_t<decltype(mean.*field)>>(m);
    stddev.*field = static_cast<std::remove_reference_t<decltype(stddev.*field)>>(s);
  };
  assign(&RunReport::steps, eval.mean, eval.stddev);
  assign(&RunReport::objects_generated, eval.mean, eval.stddev);
  assign(&RunReport::objects_transmitted, eval.mean, eval.stddev);
  assign(&RunReport::edge_comparisons, eval.mean, eval.stddev);
  assign(&RunReport::cloud_comparisons, eval.mean, eval.stddev);
  assign(&RunReport::trans_seconds, eval.mean, eval.stddev);
  assign(&RunReport::comp_parallel_seconds, eval.mean, eval.stddev);
  assign(&RunReport::comp_sum_seconds, eval.mean, eval.stddev);
  assign(&RunReport::cloud_comp_seconds, eval.mean, eval.stddev);
  assign(&RunReport::cloud_queue_seconds, eval.mean, eval.stddev);
  assign(&RunReport::e2e_seconds, eval.mean, eval.stddev);
  assign(&RunReport::unstable_steps, eval.mean, eval.stddev);
  assign(&RunReport::mean_selectivity, eval.mean, eval.stddev);
  assign(&RunReport::final_skyline_size, eval.mean, eval.stddev);
  return eval;
}

inline const char* report_header() {
  return "policy,seed,config_hash,steps,objects_generated,objects_transmitted,"
         "edge_comparisons,cloud_comparisons,trans_seconds,comp_parallel_seconds,"
         "comp_sum_seconds,cloud_comp_seconds,cloud_queue_seconds,e2e_seconds,"
         "unstable_steps,mean_selectivity,final_skyline_size";
}

inline std::string report_row(const RunReport& rep, const std::string& seed_label) {
  std::string line = rep.policy;
  line += ',' + seed_label;
  line += ',' + rep.config_hash;
  line += ',' + std::to_string(rep.steps);
  line += ',' + std::to_string(rep.objects_generated);
  line += ',' + std::to_string(rep.objects_transmitted);
  line += ',' + std::to_string(rep.edge_comparisons);
  line += ',' + std::to_string(rep.cloud_comparisons);
  line += ',' + detail::csv_double(rep.trans_seconds);
  line += ',' + detail::csv_double(rep.comp_parallel_seconds);
  line += ',' + detail::csv_double(rep.comp_sum_seconds);
  line += ',' + detail::csv_double(rep.cloud_comp_seconds);
  line += ',' + detail::csv_double(rep.cloud_queue_seconds);
  line += ',' + detail::csv_double(rep.e2e_seconds);
  line += ',' + std::to_string(rep.unstable_steps);
  line += ',' + detail::csv_double(rep.mean_selectivity);
  line += ',' + std::to_string(rep.final_skyline_size);
  return line;
}

inline void write_report_csv(const std::string& path, const PolicyEvaluation& eval,
                             bool deterministic) {
  MetricsWriter out(path, report_header(), deterministic);
  for (const RunReport& rep : eval.runs) out.row(report_row(rep, std::to_string(rep.seed)));
  out.row(report_row(eval.mean, "mean"));
  out.row(report_row(eval.stddev, "stddev"));
}

/// One row of a parameter sweep: the swept axis, its value and the
/// single-seed report obtained under it.
struct SweepRow {
  char axis = 'm';
  int value = 0;
  RunReport report;
};

/// Runs every (value, policy) combination over identically re-seeded
/// streams. Normalization constants stay at the base configuration's values
/// so reported costs remain comparable along the axis. Runs are independent
/// and fan out to one thread each; rows come back in configured order.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const EnvConfig& base_env,
                                       char axis, std::span<const int> values,
                                       std::span<Policy* const> policies) {
  if (axis != 'm' && axis != 'd') throw std::invalid_argument("run_sweep: axis must be m or d");
  if (values.empty()) throw std::invalid_argument("run_sweep: no sweep values");
  std::vector<SweepRow> rows(values.size() * policies.size());
  std::vector<std::future<void>> pending;
  std::size_t idx = 0;
  for (int value : values) {
    EnvConfig env = base_env;
    if (axis == 'm')
      env.stream.instances_per_object = value;
    else
      env.stream.dims = value;
    for (Policy* policy : policies) {
      SweepRow& row = rows[idx++];
      row.axis = axis;
      row.value = value;
      // Each task owns a policy copy: an actor's forward cache must not be
      // shared across threads.
      pending.push_back(std::async(std::launch::async,
                                   [&cfg, env, task_policy = *policy, &row]() mutable {
                                     row.report = run_experiment(cfg, env, task_policy, cfg.seed);
                                   }));
    }
  }
  for (std::future<void>& f : pending) f.get();
  return rows;
}

inline const char* sweep_header() {
  return "axis,value,policy,seed,config_hash,comp_parallel_seconds,comp_sum_seconds,"
         "trans_seconds,cloud_comp_seconds,cloud_queue_seconds,e2e_seconds,"
         "objects_transmitted,edge_comparisons,mean_selectivity";
}

inline void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows,
                            bool deterministic) {
  MetricsWriter out(path, sweep_header(), deterministic);
  for (const SweepRow& row : rows) {
    std::string line(1, row.axis);
    line += ',' + std::to_string(row.value);
    line += ',';
    line += row.report.policy;
    line += ',' + std::to_string(row.report.seed);
    line += ',' + row.report.config_hash;
    line += ',' + detail::csv_double(row.report.comp_parallel_seconds);
    line += ',' + detail::csv_double(row.report.comp_sum_seconds);
    line += ',' + detail::csv_double(row.report.trans_seconds);
    line += ',' + detail::csv_double(row.report.cloud_comp_seconds);
    line += ',' + detail::csv_double(row.report.cloud_queue_seconds);
    line += ',' + detail::csv_double(row.report.e2e_seconds);
    line += ',' + std::to_string(row.report.objects_transmitted);
    line += ',' + std::to_string(row.report.edge_comparisons);
    line += ',' + detail::csv_double(row.report.mean_selectivity);
    out.row(line);
  }
}

/// Environment factory for training: the synthetic closed-form scenario or
/// the full edge-cloud simulation (without broker measurement, which only
/// matters for evaluation accounting and slows training down).
inline std::unique_ptr<Environment> make_training_environment(const ExperimentConfig& cfg,
                                                              const EnvConfig& env_cfg) {
  if (cfg.scenario == Scenario::synthetic_convex)
    return std::make_unique<SyntheticConvexEnv>(SyntheticParams{});
  EnvConfig train_cfg = env_cfg;
  train_cfg.measure_broker = false;
  train_cfg.object_quota = 0;
  return std::make_unique<EdgeCloudEnv>(train_cfg);
}

inline void write_training_log(const std::string& path, std::span<const EpisodeLog> log,
                               const std::string& hash, std::uint64_t seed,
                               bool deterministic) {
  MetricsWriter out(path, "episode,return,critic_loss,mean_alpha,sigma_ou,config_hash,seed",
                    deterministic);
  for (const EpisodeLog& row : log) {
    std::string line = std::to_string(row.episode);
    line += ',' + detail::csv_double(row.undiscounted_return);
    line += ',' + detail::csv_double(row.mean_critic_loss);
    line += ',' + detail::csv_double(row.mean_alpha);
    line += ',' + detail::csv_double(row.sigma_ou);
    line += ',' + hash;
    line += ',' + std::to_string(seed);
    out.row(line);
  }
}

}  // namespace sapsky
