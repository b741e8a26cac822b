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

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sapsky/mlp.hpp"

namespace sapsky {

enum class PolicyKind { no_filtering, fixed_threshold, sa_psky };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::no_filtering: return "no_filtering";
    case PolicyKind::fixed_threshold: return "fixed_threshold";
    case PolicyKind::sa_psky: return "sa_psky";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "no_filtering") return PolicyKind::no_filtering;
  if (name == "fixed_threshold") return PolicyKind::fixed_threshold;
  if (name == "sa_psky") return PolicyKind::sa_psky;
  throw std::invalid_argument("unknown policy kind '" + name +
                              "' (expected no_filtering, fixed_threshold or sa_psky)");
}

/// A threshold policy: maps the system state to one alpha per node. The
/// centralized baseline additionally signals passthrough, which routes every
/// arrival to the broker without local dominance checks. Misconfiguration
/// fails here, at construction, never inside decide().
class Policy {
 public:
  static Policy no_filtering(int k_nodes, double alpha_min) {
    check_nodes(k_nodes);
    Policy p(PolicyKind::no_filtering, k_nodes);
    p.constant_.assign(k_nodes, alpha_min);
    return p;
  }

  static Policy fixed_threshold(int k_nodes, double alpha) {
    check_nodes(k_nodes);
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("fixed_threshold policy: alpha must be in [0, 1]");
    Policy p(PolicyKind::fixed_threshold, k_nodes);
    p.constant_.assign(k_nodes, alpha);
    return p;
  }

  /// Wraps a trained actor snapshot; thresholds are the sigmoid outputs
  /// rescaled into [alpha_min, alpha_max], with no exploration noise.
  static Policy sa_psky(Mlp actor, double alpha_min, double alpha_max) {
    if (!(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max <= 1.0))
      throw std::invalid_argument("sa_psky policy: bad threshold bounds");
    check_nodes(actor.output_width());
    Policy p(PolicyKind::sa_psky, actor.output_width());
    p.actor_.emplace(std::move(actor));
    p.alpha_min_ = alpha_min;
    p.alpha_max_ = alpha_max;
    return p;
  }

  PolicyKind kind() const { return kind_; }
  int k_nodes() const { return k_nodes_; }
  bool passthrough() const { return kind_ == PolicyKind::no_filtering; }
  const char* name() const { return to_string(kind_); }

  std::vector<double> decide(std::span<const double> state) {
    if (!actor_) return constant_;
    const auto& out = actor_->forward(state);
    std::vector<double> alphas(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      alphas[i] = alpha_min_ + (alpha_max_ - alpha_min_) * out[i];
    return alphas;
  }

 private:
  Policy(PolicyKind kind, int k_nodes) : kind_(kind), k_nodes_(k_nodes) {}

  static void check_nodes(int k) {
    if (k < 1) throw std::invalid_argument("policy: node count must be positive");
  }

  PolicyKind kind_;
  int k_nodes_;
  std::vector<double> constant_;
  std::optional<Mlp> actor_;
  double alpha_min_ = 0.0;
  double alpha_max_ = 1.0;
};

}  // namespace sapsky
