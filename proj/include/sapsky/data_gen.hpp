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
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sapsky/object.hpp"
#include "sapsky/rng.hpp"

namespace sapsky {

/// Attribute correlation structure of a generated stream.
enum class Distribution { independent, correlated, anti_correlated };

inline const char* to_string(Distribution d) {
  switch (d) {
    case Distribution::independent: return "independent";
    case Distribution::correlated: return "correlated";
    case Distribution::anti_correlated: return "anti_correlated";
  }
  return "?";
}

/// Parameters of one node's synthetic uncertain stream. Objects arrive as a
/// Poisson process; each object is a cluster of instances scattered around a
/// hidden center drawn from the chosen attribute distribution.
struct StreamConfig {
  Distribution distribution = Distribution::independent;
  int instances_per_object = 3;   // m
  int dims = 3;                   // d
  double arrival_rate = 2.0;      // expected objects per node per step
  double instance_spread = 0.05;  // stddev of instance scatter around the center
  double diagonal_noise = 0.10;   // center scatter off the (anti-)diagonal
  bool random_instance_probs = false;  // false: uniform 1/m weights
  double ghost_mass = 0.0;        // upper bound on withheld existence mass
  std::uint64_t seed = 1;

  void validate() const {
    if (instances_per_object < 1)
      throw std::invalid_argument("stream config: instances_per_object must be >= 1");
    if (dims < 1) throw std::invalid_argument("stream config: dims must be >= 1");
    if (arrival_rate < 0.0)
      throw std::invalid_argument("stream config: arrival_rate must be >= 0");
    if (instance_spread < 0.0)
      throw std::invalid_argument("stream config: instance_spread must be >= 0");
    if (diagonal_noise < 0.0)
      throw std::invalid_argument("stream config: diagonal_noise must be >= 0");
    if (ghost_mass < 0.0 || ghost_mass >= 1.0)
      throw std::invalid_argument("stream config: ghost_mass must be in [0, 1)");
  }
};

namespace detail {

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

/// Hidden object center in [0,1]^d under the configured correlation shape.
/// Correlated centers hug the main diagonal; anti-correlated centers live on
/// the hyperplane of constant coordinate sum through the cube midpoint.
inline std::vector<double> sample_center(Rng& rng, const StreamConfig& cfg) {
  std::vector<double> c(cfg.dims);
  switch (cfg.distribution) {
    case Distribution::independent:
      for (double& x : c) x = rng.uniform();
      break;
    case Distribution::correlated: {
      const double t = rng.uniform();
      for (double& x : c) x = clamp01(t + cfg.diagonal_noise * rng.normal());
      break;
    }
    case Distribution::anti_correlated: {
      double mean = 0.0;
      for (double& x : c) {
        x = rng.uniform();
        mean += x;
      }
      mean /= cfg.dims;
      for (double& x : c) x = clamp01(x - mean + 0.5 + cfg.diagonal_noise * rng.normal());
      break;
    }
  }
  return c;
}

}  // namespace detail

/// Substream feeding object contents for one (node, step) cell. Independent
/// of the arrival-count substream, so object payloads are reproducible by
/// coordinates alone.
inline Rng object_stream_rng(std::uint64_t root_seed, int node_id, std::int64_t step) {
  return Rng(derive_seed(root_seed, static_cast<std::uint64_t>(node_id),
                         static_cast<std::uint64_t>(step), 2));
}

/// Number of objects arriving at one node in one step. Draws from a
/// dedicated substream keyed by (seed, node, step).
inline std::int64_t arrivals_at_step(const StreamConfig& cfg, int node_id,
                                     std::int64_t step) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(node_id),
                      static_cast<std::uint64_t>(step), 1));
  return rng.poisson(cfg.arrival_rate);
}

/// Builds one uncertain object from the given content substream. Instances
/// are the center plus independent Gaussian scatter, clamped to the unit
/// cube. Weights are uniform 1/m unless random weights were requested, in
/// which case normalized exponential draws are used; ghost mass, when
/// enabled, uniformly shrinks the total below one.
inline UncertainObject generate_object(Rng& rng, const StreamConfig& cfg,
                                       ObjectId object_id, int node_id,
                                       std::int64_t arrival_step) {
  const std::vector<double> center = detail::sample_center(rng, cfg);
  std::vector<Instance> instances(cfg.instances_per_object);
  for (Instance& inst : instances) {
    inst.values.resize(cfg.dims);
    for (int r = 0; r < cfg.dims; ++r)
      inst.values[r] = detail::clamp01(center[r] + cfg.instance_spread * rng.normal());
  }
  if (cfg.random_instance_probs) {
    double total = 0.0;
    for (Instance& inst : instances) {
      inst.probability = -std::log(rng.uniform_positive());
      total += inst.probability;
    }
    for (Instance& inst : instances) inst.probability /= total;
  } else {
    const double p = 1.0 / cfg.instances_per_object;
    for (Instance& inst : instances) inst.probability = p;
  }
  if (cfg.ghost_mass > 0.0) {
    const double keep = 1.0 - cfg.ghost_mass * rng.uniform();
    for (Instance& inst : instances) inst.probability *= keep;
  }
  return UncertainObject(object_id, node_id, arrival_step, instances);
}

/// Object ids are globally unique across nodes: node id in the high digits,
/// per-node sequence number in the low ones.
inline ObjectId make_object_id(int node_id, std::int64_t sequence) {
  return static_cast<ObjectId>(node_id) * 1000000 + sequence;
}

/// Writes objects in the flat dump layout, one row per instance:
/// object_id,node_id,arrival_step,instance_index,prob,v1,...,vd
inline void write_objects_csv(std::ostream& out,
                              std::span<const UncertainObject> objects) {
  const int dims = objects.empty() ? 0 : objects.front().dims();
  out << "object_id,node_id,arrival_step,instance_index,prob";
  for (int r = 1; r <= dims; ++r) out << ",v" << r;
  out << '\n';
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << ',' << buf;
  };
  for (const UncertainObject& obj : objects) {
    for (int j = 0; j < obj.instance_count(); ++j) {
      out << obj.object_id() << ',' << obj.node_id() << ',' << obj.arrival_step()
          << ',' << j;
      put(obj.instance_probability(j));
      for (double v : obj.instance_values(j)) put(v);
      out << '\n';
    }
  }
}

}  // namespace sapsky
