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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sapsky/cost_model.hpp"
#include "sapsky/data_gen.hpp"
#include "sapsky/environment.hpp"
#include "sapsky/skyline.hpp"
#include "sapsky/window.hpp"

namespace sapsky {

/// Everything needed to run the edge-cloud simulation: stream shape, window
/// sizes, cost parameters (mu and the normalization constants must already
/// be resolved to positive values), threshold bounds and episode protocol.
struct EnvConfig {
  int k_nodes = 5;
  StreamConfig stream;
  std::size_t window_capacity = 500;
  std::size_t broker_window_capacity = 500;
  double query_alpha = 0.02;  // broker-side result threshold
  CostParams cost;
  double alpha_min = 0.001;
  double alpha_max = 0.9;
  double instability_penalty = 10.0;
  int t_max = 200;
  int warmup_steps = 10;
  int feature_horizon = 5;
  bool measure_broker = false;  // run the broker's global pass and count its work
  std::int64_t object_quota = 0;  // total objects across nodes; 0 = unbounded
  // Piecewise-constant uplink schedule: (first step, bits/s), sorted. Empty
  // means the configured bandwidth holds throughout.
  std::vector<std::pair<std::int64_t, double>> bandwidth_schedule;
  // Optional training curriculum: when non-empty, each episode draws its
  // instance count (or dimension count) from these choices, so a policy
  // learns to respond to regimes it will meet in sweeps. Empty = fixed.
  std::vector<int> episode_m_choices;
  std::vector<int> episode_d_choices;

  void validate() const {
    if (k_nodes < 1) throw std::invalid_argument("env config: k_nodes must be >= 1");
    stream.validate();
    cost.validate();
    if (window_capacity == 0 || broker_window_capacity == 0)
      throw std::invalid_argument("env config: window capacities must be positive");
    if (!(query_alpha >= 0.0 && query_alpha <= 1.0))
      throw std::invalid_argument("env config: query_alpha must be in [0, 1]");
    if (!(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max <= 1.0))
      throw std::invalid_argument("env config: need 0 <= alpha_min < alpha_max <= 1");
    if (instability_penalty <= 0.0)
      throw std::invalid_argument("env config: instability_penalty must be positive");
    if (t_max < 1) throw std::invalid_argument("env config: t_max must be >= 1");
    if (warmup_steps < 0) throw std::invalid_argument("env config: warmup_steps must be >= 0");
    if (feature_horizon < 1)
      throw std::invalid_argument("env config: feature_horizon must be >= 1");
    if (object_quota < 0)
      throw std::invalid_argument("env config: object_quota must be >= 0");
    for (const auto& [step, bps] : bandwidth_schedule)
      if (step < 0 || bps <= 0.0)
        throw std::invalid_argument("env config: malformed bandwidth schedule entry");
    for (int m : episode_m_choices)
      if (m < 1) throw std::invalid_argument("env config: episode m choice must be >= 1");
    for (int d : episode_d_choices)
      if (d < 1) throw std::invalid_argument("env config: episode d choice must be >= 1");
  }
};

/// Raw observable system status: recent arrival rates and instance scatter
/// per node, a signed correlation indicator per node, the upcoming uplink
/// bandwidth and the last queue utilization.
struct SystemState {
  std::vector<double> lambdas;
  std::vector<double> sigmas;
  std::vector<double> density;
  double bandwidth_bps = 0.0;
  double queue_rho = 0.0;
};

/// Flattens a state for the agent in fixed order: K lambdas, K sigmas, K
/// density indicators, bandwidth, utilization; length 3K+2. Scaling is
/// linear in each raw feature (a zero state maps to the zero vector) with
/// reference constants fixed by the configuration, so the mapping never
/// drifts during training. Values may exceed 1 under unusual load; nothing
/// is clipped.
inline std::vector<double> flatten_system_state(const SystemState& st, double lambda_ref,
                                                double spread_ref, double bandwidth_ref) {
  if (st.lambdas.size() != st.sigmas.size() || st.lambdas.size() != st.density.size())
    throw std::invalid_argument("flatten_system_state: per-node field length mismatch");
  std::vector<double> s;
  s.reserve(3 * st.lambdas.size() + 2);
  const double lambda_scale = 2.0 * std::max(lambda_ref, 1e-12);
  const double sigma_scale = std::max(2.0 * spread_ref * spread_ref, 1e-12);
  const double bandwidth_scale = 2.0 * std::max(bandwidth_ref, 1e-12);
  for (double v : st.lambdas) s.push_back(v / lambda_scale);
  for (double v : st.sigmas) s.push_back(v / sigma_scale);
  for (double v : st.density) s.push_back(v);  // already in [-1, 1]
  s.push_back(st.bandwidth_bps / bandwidth_scale);
  s.push_back(st.queue_rho / 2.0);
  return s;
}

/// What one simulation step produced, for both reward shaping and report
/// aggregation.
struct StepRecord {
  std::int64_t step = 0;
  StepCosts costs;
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> transmitted;
  std::vector<std::uint64_t> edge_comparisons;
  std::vector<std::size_t> window_sizes;
  std::vector<std::size_t> candidate_counts;  // window survivors per node
  std::uint64_t cloud_comparisons = 0;
};

/// The simulated system: K edge nodes ingesting independent uncertain
/// streams into sliding windows, per-node threshold filtering, an uplink,
/// and a cloud broker holding its own window of received candidates. One
/// step is one unit of modeled time; rates and service times share it.
class EdgeCloudSim {
 public:
  EdgeCloudSim(EnvConfig cfg, std::uint64_t seed)
      : cfg_(std::move(cfg)), seed_(seed), broker_(cfg_.broker_window_capacity) {
    cfg_.validate();
    nodes_.reserve(cfg_.k_nodes);
    const std::int64_t base = cfg_.object_quota / cfg_.k_nodes;
    const std::int64_t extra = cfg_.object_quota % cfg_.k_nodes;
    for (int i = 0; i < cfg_.k_nodes; ++i) {
      nodes_.emplace_back(cfg_.window_capacity);
      quotas_.push_back(cfg_.object_quota == 0 ? -1 : base + (i < extra ? 1 : 0));
      generated_.push_back(0);
    }
    arrival_hist_.assign(cfg_.k_nodes, {});
    scatter_hist_.assign(cfg_.k_nodes, {});
  }

  const EnvConfig& config() const { return cfg_; }
  std::int64_t step_index() const { return step_; }

  /// Optional tap invoked for every generated object, in ingestion order.
  /// Lets tooling dump the exact stream a run consumed.
  void set_generation_observer(std::function<void(const UncertainObject&)> cb) {
    on_generate_ = std::move(cb);
  }

  std::int64_t total_generated() const {
    std::int64_t total = 0;
    for (std::int64_t g : generated_) total += g;
    return total;
  }

  bool quota_exhausted() const {
    if (cfg_.object_quota == 0) return false;
    for (int i = 0; i < cfg_.k_nodes; ++i)
      if (generated_[i] < quotas_[i]) return false;
    return true;
  }

  double bandwidth_at(std::int64_t step) const {
    double bps = cfg_.cost.bandwidth_bps;
    for (const auto& [from, value] : cfg_.bandwidth_schedule) {
      if (from <= step)
        bps = value;
      else
        break;
    }
    return bps;
  }

  /// Advances one time step. In passthrough mode nodes skip dominance work
  /// entirely and forward every arrival (the centralized baseline); the
  /// broker, when measured, then runs the full reference computation over
  /// its window instead of a filtered pass.
  StepRecord advance(std::span<const double> alphas, bool passthrough) {
    if (static_cast<int>(alphas.size()) != cfg_.k_nodes)
      throw std::invalid_argument("sim advance: one alpha per node required");
    ++step_;
    StepRecord rec;
    rec.step = step_;
    rec.arrivals.resize(cfg_.k_nodes);
    rec.transmitted.resize(cfg_.k_nodes);
    rec.edge_comparisons.resize(cfg_.k_nodes);
    rec.window_sizes.resize(cfg_.k_nodes);
    rec.candidate_counts.resize(cfg_.k_nodes);
    rec.costs.comp_seconds.assign(cfg_.k_nodes, 0.0);
    rec.costs.trans_seconds.assign(cfg_.k_nodes, 0.0);
    rec.costs.selectivity.assign(cfg_.k_nodes, 1.0);

    const double bps = bandwidth_at(step_);
    std::vector<UncertainObject> to_broker;

    for (int i = 0; i < cfg_.k_nodes; ++i) {
      // Ingest this step's arrivals, respecting any remaining quota.
      std::int64_t n = arrivals_at_step(stream_for_node(i), i, step_);
      if (quotas_[i] >= 0) n = std::min(n, quotas_[i] - generated_[i]);
      Rng content = object_stream_rng(seed_, i, step_);
      double scatter_sum = 0.0;
      std::vector<const UncertainObject*> fresh;
      for (std::int64_t k = 0; k < n; ++k) {
        UncertainObject obj = generate_object(content, cfg_.stream,
                                              make_object_id(i, generated_[i]), i, step_);
        ++generated_[i];
        scatter_sum += instance_scatter(obj);
        if (on_generate_) on_generate_(obj);
        nodes_[i].insert(std::move(obj));
      }
      rec.arrivals[i] = n;
      push_history(arrival_hist_[i], static_cast<double>(n));
      push_history(scatter_hist_[i], n > 0 ? scatter_sum / n : -1.0);

      const auto window = nodes_[i].active();
      rec.window_sizes[i] = window.size();

      if (passthrough) {
        // No local dominance checks; everything new goes up.
        rec.transmitted[i] = n;
        rec.candidate_counts[i] = static_cast<std::size_t>(n);
        rec.costs.selectivity[i] = 1.0;
        const std::size_t kept = std::min<std::size_t>(window.size(), n);
        for (std::size_t w = window.size() - kept; w < window.size(); ++w)
          to_broker.push_back(window[w]);
      } else {
        DominanceStats stats;
        const auto candidates = local_filter(window, alphas[i], stats);
        rec.edge_comparisons[i] = stats.instance_pair_comparisons;
        rec.candidate_counts[i] = candidates.size();
        rec.costs.comp_seconds[i] =
            comp_time_measured(cfg_.cost.kappa, stats.instance_pair_comparisons,
                               cfg_.stream.dims);
        rec.costs.selectivity[i] =
            window.empty() ? 1.0
                           : static_cast<double>(candidates.size()) / window.size();
        // An object is transmitted once, at the step it arrives and passes.
        std::int64_t sent = 0;
        for (const Candidate& c : candidates) {
          if (c.object.arrival_step() == step_) {
            to_broker.push_back(c.object);
            ++sent;
          }
        }
        rec.transmitted[i] = sent;
      }
      rec.costs.trans_seconds[i] = trans_time(rec.transmitted[i], cfg_.cost.omega_bits, bps);
    }

    // Broker ingestion preserves (step, id) order: ids ascend with node index.
    for (UncertainObject& obj : to_broker) broker_.insert(std::move(obj));
    if (cfg_.measure_broker) {
      DominanceStats cloud;
      if (passthrough)
        brute_force_skyline(broker_.active(), cfg_.query_alpha, &cloud);
      else
        local_filter(broker_.active(), cfg_.query_alpha, cloud);
      rec.cloud_comparisons = cloud.instance_pair_comparisons;
    }

    // Queueing: configured rates thinned by current selectivities.
    const std::vector<double> rates(cfg_.k_nodes, cfg_.stream.arrival_rate);
    const double offered = offered_load(rates, rec.costs.selectivity);
    const CloudTime cloud = cloud_time(offered, cfg_.cost.mu);
    rec.costs.rho = cloud.rho;
    rec.costs.stable = cloud.stable;
    rec.costs.cloud_seconds = cloud.stable ? cloud.seconds : 0.0;
    last_rho_ = cloud.rho;
    rec.costs.l_sys = system_latency(rec.costs.comp_seconds, rec.costs.trans_seconds,
                                     rec.costs.cloud_seconds);
    double sum_comp = 0.0;
    for (double c : rec.costs.comp_seconds) sum_comp += c;
    rec.costs.cost = total_cost(sum_comp, rec.costs.l_sys, cfg_.cost);
    return rec;
  }

  /// Raw trailing-mean observation of the system as of the current step.
  SystemState observe() const {
    SystemState st;
    st.lambdas.reserve(cfg_.k_nodes);
    st.sigmas.reserve(cfg_.k_nodes);
    st.density.reserve(cfg_.k_nodes);
    for (int i = 0; i < cfg_.k_nodes; ++i) {
      st.lambdas.push_back(history_mean(arrival_hist_[i], false));
      st.sigmas.push_back(history_mean(scatter_hist_[i], true));
      st.density.push_back(window_correlation(nodes_[i].active()));
    }
    st.bandwidth_bps = bandwidth_at(step_ + 1);
    st.queue_rho = last_rho_;
    return st;
  }

  std::vector<double> state_vector() const {
    return flatten_system_state(observe(), cfg_.stream.arrival_rate,
                                cfg_.stream.instance_spread, cfg_.cost.bandwidth_bps);
  }

  int state_width() const { return 3 * cfg_.k_nodes + 2; }

  std::span<const UncertainObject> node_window(int node) const {
    return nodes_[node].active();
  }
  std::span<const UncertainObject> broker_window() const { return broker_.active(); }

  /// Exact global skyline of the broker's current window at the query
  /// threshold; on-demand result extraction, not part of step accounting.
  std::vector<ScoredObject> global_skyline() const {
    DominanceStats scratch;
    std::vector<ScoredObject> out;
    for (const Candidate& c : local_filter(broker_.active(), cfg_.query_alpha, scratch))
      out.push_back(ScoredObject{c.object.object_id(), c.object.node_id(),
                                 c.local_probability});
    return out;
  }

 private:
  /// Mean squared deviation of instance coordinates around the object's
  /// center: the per-object scatter statistic feeding the sigma feature.
  static double instance_scatter(const UncertainObject& obj) {
    const int m = obj.instance_count();
    const int d = obj.dims();
    double total = 0.0;
    for (int r = 0; r < d; ++r) {
      double mean = 0.0;
      for (int j = 0; j < m; ++j) mean += obj.instance_values(j)[r];
      mean /= m;
      for (int j = 0; j < m; ++j) {
        const double dev = obj.instance_values(j)[r] - mean;
        total += dev * dev;
      }
    }
    return total / (static_cast<double>(m) * d);
  }

  /// Mean pairwise Pearson correlation between coordinate pairs of the
  /// window's object centers; the signed density indicator in [-1, 1].
  static double window_correlation(std::span<const UncertainObject> window) {
    if (window.size() < 3) return 0.0;
    const int d = window.front().dims();
    if (d < 2) return 0.0;
    const std::size_t n = window.size();
    std::vector<double> mean(d, 0.0), sq(d, 0.0);
    std::vector<double> cross(static_cast<std::size_t>(d) * d, 0.0);
    std::vector<double> center(d);
    for (const UncertainObject& obj : window) {
      const int m = obj.instance_count();
      for (int r = 0; r < d; ++r) {
        double c = 0.0;
        for (int j = 0; j < m; ++j) c += obj.instance_values(j)[r];
        center[r] = c / m;
      }
      for (int r = 0; r < d; ++r) {
        mean[r] += center[r];
        sq[r] += center[r] * center[r];
        for (int t = r + 1; t < d; ++t) cross[r * d + t] += center[r] * center[t];
      }
    }
    double corr_sum = 0.0;
    int pairs = 0;
    for (int r = 0; r < d; ++r) {
      for (int t = r + 1; t < d; ++t) {
        const double vr = sq[r] / n - (mean[r] / n) * (mean[r] / n);
        const double vt = sq[t] / n - (mean[t] / n) * (mean[t] / n);
        if (vr <= 1e-15 || vt <= 1e-15) continue;
        const double cov = cross[r * d + t] / n - (mean[r] / n) * (mean[t] / n);
        corr_sum += cov / std::sqrt(vr * vt);
        ++pairs;
      }
    }
    return pairs ? corr_sum / pairs : 0.0;
  }

  void push_history(std::deque<double>& hist, double value) const {
    hist.push_back(value);
    while (static_cast<int>(hist.size()) > cfg_.feature_horizon) hist.pop_front();
  }

  /// Mean over the horizon; negative entries mark steps without a
  /// measurement (no arrivals) and are excluded when requested.
  static double history_mean(const std::deque<double>& hist, bool skip_negative) {
    double sum = 0.0;
    int count = 0;
    for (double v : hist) {
      if (skip_negative && v < 0.0) continue;
      sum += v;
      ++count;
    }
    return count ? sum / count : 0.0;
  }

  StreamConfig stream_for_node(int) const {
    StreamConfig s = cfg_.stream;
    s.seed = seed_;
    return s;
  }

  EnvConfig cfg_;
  std::uint64_t seed_;
  std::vector<SlidingWindow> nodes_;
  SlidingWindow broker_;
  std::vector<std::int64_t> quotas_;
  std::vector<std::int64_t> generated_;
  std::vector<std::deque<double>> arrival_hist_;
  std::vector<std::deque<double>> scatter_hist_;
  std::function<void(const UncertainObject&)> on_generate_;
  std::int64_t step_ = 0;
  double last_rho_ = 0.0;
};

/// Profiled normalization constants: the observed per-step maxima of the
/// summed computation term and of the end-to-end latency, taken over short
/// measured runs at the two threshold extremes. Windows are pre-filled in
/// passthrough mode so the profile reflects steady-state occupancy.
struct NormalizationProfile {
  double c_max = 0.0;
  double l_max = 0.0;
};

inline NormalizationProfile profile_normalization(const EnvConfig& cfg,
                                                  std::uint64_t seed,
                                                  int measured_steps = 50) {
  NormalizationProfile prof;
  EnvConfig work = cfg;
  work.measure_broker = false;
  work.object_quota = 0;
  const int fill_steps =
      cfg.stream.arrival_rate > 0.0
          ? static_cast<int>(static_cast<double>(cfg.window_capacity) /
                             cfg.stream.arrival_rate) +
                cfg.feature_horizon
          : cfg.feature_horizon;
  for (double alpha : {0.0, cfg.alpha_max}) {
    EdgeCloudSim sim(work, seed);
    const std::vector<double> neutral(work.k_nodes, alpha);
    const std::vector<double> none(work.k_nodes, 0.0);
    for (int t = 0; t < fill_steps; ++t) sim.advance(none, true);
    for (int t = 0; t < measured_steps; ++t) {
      const StepRecord rec = sim.advance(neutral, false);
      double sum_comp = 0.0;
      for (double c : rec.costs.comp_seconds) sum_comp += c;
      prof.c_max = std::max(prof.c_max, sum_comp);
      prof.l_max = std::max(prof.l_max, rec.costs.l_sys);
    }
  }
  if (prof.c_max <= 0.0) prof.c_max = 1e-9;
  if (prof.l_max <= 0.0) prof.l_max = 1e-9;
  return prof;
}

/// The training environment: episodes of t_max steps over a fresh seeded
/// simulation, reward = -(normalized cost), with the stability penalty
/// replacing the undefined queue term whenever utilization reaches one.
class EdgeCloudEnv final : public Environment {
 public:
  explicit EdgeCloudEnv(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  int state_width() const override { return 3 * cfg_.k_nodes + 2; }
  int action_width() const override { return cfg_.k_nodes; }
  const EnvConfig& config() const { return cfg_; }

  std::vector<double> reset(std::uint64_t seed) override {
    EnvConfig episode_cfg = cfg_;
    if (!cfg_.episode_m_choices.empty())
      episode_cfg.stream.instances_per_object =
          cfg_.episode_m_choices[mix64(derive_seed(seed, 0x7D1)) %
                                 cfg_.episode_m_choices.size()];
    if (!cfg_.episode_d_choices.empty())
      episode_cfg.stream.dims =
          cfg_.episode_d_choices[mix64(derive_seed(seed, 0x7D2)) %
                                 cfg_.episode_d_choices.size()];
    sim_.emplace(episode_cfg, seed);
    t_ = 0;
    const double neutral_alpha = 0.5 * (cfg_.alpha_min + cfg_.alpha_max);
    const std::vector<double> neutral(cfg_.k_nodes, neutral_alpha);
    for (int i = 0; i < cfg_.warmup_steps; ++i) sim_->advance(neutral, false);
    return sim_->state_vector();
  }

  StepOutcome step(std::span<const double> alphas) override {
    if (!sim_) throw std::logic_error("env step: reset() must run first");
    if (t_ >= cfg_.t_max) throw std::logic_error("env step: episode already finished");
    std::vector<double> clipped(alphas.begin(), alphas.end());
    if (static_cast<int>(clipped.size()) != cfg_.k_nodes)
      throw std::invalid_argument("env step: one alpha per node required");
    for (double& a : clipped) a = std::clamp(a, cfg_.alpha_min, cfg_.alpha_max);
    const StepRecord rec = sim_->advance(clipped, false);
    StepOutcome out;
    out.costs = rec.costs;
    out.reward = -rec.costs.cost - (rec.costs.stable ? 0.0 : cfg_.instability_penalty);
    out.state = sim_->state_vector();
    out.done = ++t_ >= cfg_.t_max;
    return out;
  }

  const EdgeCloudSim& sim() const {
    if (!sim_) throw std::logic_error("env sim: reset() must run first");
    return *sim_;
  }

 private:
  EnvConfig cfg_;
  std::optional<EdgeCloudSim> sim_;
  int t_ = 0;
};

}  // namespace sapsky
