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
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace sapsky {

/// Latency model parameters. kappa converts one instance-pair attribute
/// check into seconds; omega and bandwidth price the uplink; mu is the cloud
/// service rate in objects per second. c_max and l_max normalize the two
/// cost terms and usually come from a profiling pre-pass.
struct CostParams {
  double kappa = 1e-7;
  double omega_bits = 1000.0;
  double bandwidth_bps = 1e6;
  double mu = 0.0;
  double w1 = 0.5;
  double w2 = 0.5;
  double c_max = 1.0;
  double l_max = 1.0;

  void validate() const {
    if (kappa <= 0.0) throw std::invalid_argument("cost params: kappa must be positive");
    if (omega_bits <= 0.0)
      throw std::invalid_argument("cost params: omega_bits must be positive");
    if (bandwidth_bps <= 0.0)
      throw std::invalid_argument("cost params: bandwidth_bps must be positive");
    if (mu <= 0.0) throw std::invalid_argument("cost params: mu must be positive");
    if (w1 < 0.0 || w2 < 0.0 || w1 + w2 <= 0.0)
      throw std::invalid_argument("cost params: weights must be non-negative, not both zero");
    if (c_max <= 0.0) throw std::invalid_argument("cost params: c_max must be positive");
    if (l_max <= 0.0) throw std::invalid_argument("cost params: l_max must be positive");
  }
};

/// Cloud service rate that yields the target utilization when every node
/// forwards its full stream.
inline double mu_for_target_rho(int k_nodes, double arrival_rate, double rho_target) {
  if (rho_target <= 0.0 || rho_target >= 1.0)
    throw std::invalid_argument("mu_for_target_rho: target must be in (0, 1)");
  return k_nodes * arrival_rate / rho_target;
}

/// Modeled per-step filtering time of one node: every ordered object pair in
/// a window of n objects costs phi * m^2 * d attribute checks, where phi is
/// the fraction of the pair grid actually visited before termination.
inline double comp_time_model(double kappa, std::int64_t n, double phi, int m, int d) {
  if (n < 0) throw std::invalid_argument("comp_time_model: negative window size");
  return kappa * static_cast<double>(n) * static_cast<double>(n - 1 < 0 ? 0 : n - 1) *
         phi * static_cast<double>(m) * m * d;
}

/// Measured filtering time from the dominance counters: d attribute checks
/// are charged per instance pair visited.
inline double comp_time_measured(double kappa, std::uint64_t pair_comparisons, int d) {
  return kappa * static_cast<double>(pair_comparisons) * d;
}

/// Uplink time for `count` transmitted objects of omega_bits each.
inline double trans_time(std::int64_t count, double omega_bits, double bandwidth_bps) {
  if (count < 0) throw std::invalid_argument("trans_time: negative object count");
  return static_cast<double>(count) * omega_bits / bandwidth_bps;
}

/// Aggregate arrival rate at the cloud: each node contributes its stream
/// rate thinned by its current selectivity.
inline double offered_load(std::span<const double> arrival_rates,
                           std::span<const double> selectivities) {
  if (arrival_rates.size() != selectivities.size())
    throw std::invalid_argument("offered_load: rate/selectivity length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < arrival_rates.size(); ++i)
    total += arrival_rates[i] * selectivities[i];
  return total;
}

/// M/M/1 sojourn outcome. When the queue is unstable (rho >= 1) no finite
/// sojourn exists; callers handle that through the flag, never an exception.
struct CloudTime {
  bool stable;
  double seconds;
  double rho;
};

inline CloudTime cloud_time(double offered, double mu) {
  if (mu <= 0.0) throw std::invalid_argument("cloud_time: mu must be positive");
  if (offered < 0.0) throw std::invalid_argument("cloud_time: negative offered load");
  const double rho = offered / mu;
  if (rho >= 1.0) return CloudTime{false, 0.0, rho};
  return CloudTime{true, 1.0 / (mu - offered), rho};
}

/// End-to-end latency of one step: edge nodes filter in parallel (max), the
/// uplink is shared (sum), then the cloud queue.
inline double system_latency(std::span<const double> comp_seconds,
                             std::span<const double> trans_seconds,
                             double cloud_seconds) {
  double comp = 0.0;
  for (double c : comp_seconds) comp = std::max(comp, c);
  double trans = std::accumulate(trans_seconds.begin(), trans_seconds.end(), 0.0);
  return comp + trans + cloud_seconds;
}

/// Normalized scalar cost of one step, the negative of the agent's reward
/// before any stability penalty.
inline double total_cost(double sum_comp_seconds, double l_sys_seconds,
                         const CostParams& p) {
  return p.w1 * sum_comp_seconds / p.c_max + p.w2 * l_sys_seconds / p.l_max;
}

/// Everything the cost model says about one simulation step.
struct StepCosts {
  std::vector<double> comp_seconds;
  std::vector<double> trans_seconds;
  std::vector<double> selectivity;
  double rho = 0.0;
  bool stable = true;
  double cloud_seconds = 0.0;
  double l_sys = 0.0;
  double cost = 0.0;
};

}  // namespace sapsky
