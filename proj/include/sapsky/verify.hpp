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
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "sapsky/data_gen.hpp"
#include "sapsky/mlp.hpp"
#include "sapsky/rng.hpp"
#include "sapsky/skyline.hpp"

namespace sapsky {

/// Outcome of one verification battery: self-contained checks of the
/// load-bearing numerics against independent oracles, runnable end to end
/// from the command line.
struct BatteryResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::vector<UncertainObject> random_dataset(Rng& rng, int n, int m, int d,
                                                   Distribution dist) {
  StreamConfig cfg;
  cfg.distribution = dist;
  cfg.instances_per_object = m;
  cfg.dims = d;
  cfg.instance_spread = 0.02 + 0.1 * rng.uniform();
  cfg.random_instance_probs = rng.uniform() < 0.5;
  cfg.ghost_mass = rng.uniform() < 0.3 ? 0.2 : 0.0;
  std::vector<UncertainObject> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(generate_object(rng, cfg, i, 0, 0));
  return out;
}

inline std::string format_count(const char* what, std::int64_t n) {
  return std::to_string(n) + " " + what;
}

}  // namespace detail

/// Filter-vs-full-scan equivalence over randomized windows: candidate sets
/// from the early-terminating filter must match the exhaustive reference.
/// With `corrupt_filter` set, a candidate is deliberately dropped from each
/// non-empty filter result; the battery must then fail, proving the
/// comparison actually bites.
inline BatteryResult skyline_oracle_battery(std::uint64_t seed, int windows = 1000,
                                            bool corrupt_filter = false) {
  BatteryResult res;
  res.name = "skyline_oracle";
  const Distribution dists[] = {Distribution::independent, Distribution::correlated,
                                Distribution::anti_correlated};
  std::int64_t mismatches = 0;
  std::int64_t filter_runs = 0;
  for (int w = 0; w < windows; ++w) {
    Rng rng(derive_seed(seed, 0xB1, w));
    const int n = 2 + static_cast<int>(rng.uniform_index(49));     // up to 50 objects
    const int m = 1 + static_cast<int>(rng.uniform_index(5));      // up to 5 instances
    const int d = 1 + static_cast<int>(rng.uniform_index(4));      // up to 4 dims
    const auto dataset = detail::random_dataset(rng, n, m, d, dists[w % 3]);
    for (double alpha : {0.02, 0.1, 0.5}) {
      DominanceStats stats;
      auto filtered = local_filter(dataset, alpha, stats);
      if (corrupt_filter && !filtered.empty()) filtered.pop_back();
      const auto oracle = brute_force_skyline(dataset, alpha);
      ++filter_runs;
      if (filtered.size() != oracle.size()) {
        ++mismatches;
        continue;
      }
      // Both are emitted in dataset order, so compare positionally.
      for (std::size_t i = 0; i < filtered.size(); ++i) {
        if (filtered[i].object.object_id() != oracle[i].object_id ||
            filtered[i].local_probability != oracle[i].probability) {
          ++mismatches;
          break;
        }
      }
    }
  }
  res.pass = mismatches == 0;
  res.detail = detail::format_count("windows", windows) + ", " +
               detail::format_count("filter runs", filter_runs) + ", " +
               detail::format_count("mismatches", mismatches);
  return res;
}

/// Subset monotonicity: removing objects from a dataset can only raise a
/// survivor's skyline probability, the property that makes per-node
/// filtering safe.
inline BatteryResult monotonicity_battery(std::uint64_t seed, int triples = 500,
                                          double tolerance = 1e-12) {
  BatteryResult res;
  res.name = "monotonicity";
  const Distribution dists[] = {Distribution::independent, Distribution::correlated,
                                Distribution::anti_correlated};
  std::int64_t violations = 0;
  double worst_gap = 0.0;
  for (int t = 0; t < triples; ++t) {
    Rng rng(derive_seed(seed, 0xB2, t));
    const int n = 3 + static_cast<int>(rng.uniform_index(38));
    const int m = 1 + static_cast<int>(rng.uniform_index(4));
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    const auto dataset = detail::random_dataset(rng, n, m, d, dists[t % 3]);
    const std::size_t target = rng.uniform_index(dataset.size());
    std::vector<UncertainObject> subset;
    subset.push_back(dataset[target]);
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (i != target && rng.uniform() < 0.5) subset.push_back(dataset[i]);
    const double full = skyline_probability(dataset[target], dataset);
    const double sub = skyline_probability(dataset[target], subset);
    if (sub < full - tolerance) {
      ++violations;
      worst_gap = std::max(worst_gap, full - sub);
    }
  }
  res.pass = violations == 0;
  char gap[32];
  std::snprintf(gap, sizeof gap, "%.3g", worst_gap);
  res.detail = detail::format_count("triples", triples) + ", " +
               detail::format_count("violations", violations) +
               (violations ? std::string(", worst gap ") + gap : "");
  return res;
}

/// Single-queue discrete-event check of the sojourn formula 1/(mu - lambda):
/// FIFO, Poisson arrivals, exponential service. The mean sojourn over a long
/// run must land near the closed form at moderate and at heavy load.
inline BatteryResult mm1_battery(std::uint64_t seed, int arrivals = 200000) {
  BatteryResult res;
  res.name = "mm1";
  res.pass = true;
  const double mu = 1.0;
  const struct {
    double rho;
    double tolerance;
  } loads[] = {{0.5, 0.10}, {0.9, 0.15}};
  std::string detail;
  for (const auto& load : loads) {
    Rng rng(derive_seed(seed, 0xB3, static_cast<std::uint64_t>(load.rho * 100)));
    const double lambda = load.rho * mu;
    double arrival = 0.0, last_departure = 0.0;
    double sojourn_sum = 0.0;
    std::int64_t counted = 0;
    const int burn_in = arrivals / 10;
    for (int i = 0; i < arrivals; ++i) {
      arrival += -std::log(rng.uniform_positive()) / lambda;
      const double service = -std::log(rng.uniform_positive()) / mu;
      const double departure = std::max(arrival, last_departure) + service;
      last_departure = departure;
      if (i >= burn_in) {
        sojourn_sum += departure - arrival;
        ++counted;
      }
    }
    const double observed = sojourn_sum / counted;
    const double expected = 1.0 / (mu - lambda);
    const double rel = std::abs(observed - expected) / expected;
    if (rel > load.tolerance) res.pass = false;
    char buf[96];
    std::snprintf(buf, sizeof buf, "rho=%.1f observed %.3f expected %.3f (%.1f%% off); ",
                  load.rho, observed, expected, 100.0 * rel);
    detail += buf;
  }
  res.detail = detail::format_count("arrivals per load", arrivals) + ": " + detail;
  return res;
}

namespace detail {

/// Worst relative disagreement between the analytic backward pass and a
/// central finite difference, across parameters, inputs and the auxiliary
/// input, for the scalar loss sum_k c_k * out_k.
inline double gradient_check_error(Mlp& net, std::span<const double> input,
                                   std::span<const double> aux,
                                   std::span<const double> c) {
  const auto loss = [&]() {
    const auto& out = net.forward(input, aux);
    double l = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) l += c[k] * out[k];
    return l;
  };
  loss();
  const std::vector<double> dloss(c.begin(), c.end());
  const Mlp::Gradients g = net.backward(dloss);

  const double h = 1e-6;
  double worst = 0.0;
  const auto compare = [&worst](double analytic, double numeric) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  std::vector<double> in_copy(input.begin(), input.end());
  std::vector<double> aux_copy(aux.begin(), aux.end());
  for (std::size_t p = 0; p < net.param_count(); ++p) {
    const double keep = net.params()[p];
    net.params()[p] = keep + h;
    const double up = loss();
    net.params()[p] = keep - h;
    const double down = loss();
    net.params()[p] = keep;
    compare(g.params[p], (up - down) / (2.0 * h));
  }
  for (std::size_t i = 0; i < in_copy.size(); ++i) {
    const double keep = in_copy[i];
    in_copy[i] = keep + h;
    const double up = [&]() {
      const auto& out = net.forward(in_copy, aux_copy);
      double l = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) l += c[k] * out[k];
      return l;
    }();
    in_copy[i] = keep - h;
    const double down = [&]() {
      const auto& out = net.forward(in_copy, aux_copy);
      double l = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) l += c[k] * out[k];
      return l;
    }();
    in_copy[i] = keep;
    compare(g.input[i], (up - down) / (2.0 * h));
  }
  for (std::size_t i = 0; i < aux_copy.size(); ++i) {
    const double keep = aux_copy[i];
    aux_copy[i] = keep + h;
    const double up = [&]() {
      const auto& out = net.forward(in_copy, aux_copy);
      double l = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) l += c[k] * out[k];
      return l;
    }();
    aux_copy[i] = keep - h;
    const double down = [&]() {
      const auto& out = net.forward(in_copy, aux_copy);
      double l = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) l += c[k] * out[k];
      return l;
    }();
    aux_copy[i] = keep;
    compare(g.aux[i], (up - down) / (2.0 * h));
  }
  return worst;
}

}  // namespace detail

/// Backpropagation vs central finite differences on randomized small
/// networks, covering plain actors and critics with a late-joining action
/// input.
inline BatteryResult gradient_battery(std::uint64_t seed, int networks = 20,
                                      double tolerance = 1e-4) {
  BatteryResult res;
  res.name = "gradients";
  double worst = 0.0;
  for (int n = 0; n < networks; ++n) {
    Rng rng(derive_seed(seed, 0xB4, n));
    MlpSpec spec;
    const int layers = 2 + static_cast<int>(rng.uniform_index(2));  // 2 or 3 affine layers
    spec.widths.push_back(1 + static_cast<int>(rng.uniform_index(8)));
    for (int l = 0; l < layers; ++l)
      spec.widths.push_back(1 + static_cast<int>(rng.uniform_index(8)));
    spec.hidden = n % 2 ? Activation::relu : Activation::sigmoid;
    spec.output = n % 3 ? Activation::identity : Activation::sigmoid;
    if (n % 2 == 0 && layers >= 2) {
      spec.aux_width = 1 + static_cast<int>(rng.uniform_index(4));
      spec.aux_layer = 1;
    }
    Mlp net(spec);
    net.init_uniform(rng);
    std::vector<double> input(spec.widths.front());
    for (double& v : input) v = rng.uniform(-1.0, 1.0);
    std::vector<double> aux(std::max(spec.aux_width, 0));
    for (double& v : aux) v = rng.uniform(-1.0, 1.0);
    std::vector<double> c(spec.widths.back());
    for (double& v : c) v = rng.uniform(-1.0, 1.0);
    worst = std::max(worst, detail::gradient_check_error(net, input, aux, c));
  }
  res.pass = worst < tolerance;
  char buf[64];
  std::snprintf(buf, sizeof buf, "worst relative error %.3g", worst);
  res.detail = detail::format_count("networks", networks) + ", " + buf;
  return res;
}

/// Runs the selected batteries in a fixed order. Unknown names fail fast;
/// an explicitly empty selection is a no-op pass by contract.
inline std::vector<BatteryResult> run_verification(std::span<const std::string> selection,
                                                   std::uint64_t seed) {
  std::vector<BatteryResult> results;
  for (const std::string& name : selection) {
    if (name == "skyline_oracle") results.push_back(skyline_oracle_battery(seed));
    else if (name == "monotonicity") results.push_back(monotonicity_battery(seed));
    else if (name == "mm1") results.push_back(mm1_battery(seed));
    else if (name == "gradients") results.push_back(gradient_battery(seed));
    else
      results.push_back(BatteryResult{name, false, "unknown battery"});
  }
  return results;
}

inline std::vector<std::string> all_battery_names() {
  return {"skyline_oracle", "monotonicity", "mm1", "gradients"};
}

}  // namespace sapsky
