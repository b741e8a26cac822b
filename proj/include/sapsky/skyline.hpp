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
#include <vector>

#include "sapsky/object.hpp"

namespace sapsky {

/// Work counters for dominance passes. One "comparison" is one instance pair
/// test; the cost model charges d attribute checks per pair regardless of
/// short-circuiting inside the pair.
struct DominanceStats {
  std::uint64_t instance_pair_comparisons = 0;
  std::uint64_t objects_scanned = 0;
  std::uint64_t candidates_emitted = 0;

  void reset() { *this = DominanceStats{}; }
};

/// Pareto dominance under minimization: a <= b in every dimension and a < b
/// in at least one.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dominates: dimension mismatch");
  bool strict = false;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] > b[r]) return false;
    if (a[r] < b[r]) strict = true;
  }
  return strict;
}

inline bool dominates(const Instance& a, const Instance& b) {
  return dominates(std::span<const double>(a.values),
                   std::span<const double>(b.values));
}

/// Probability that object a dominates object b: the existence-weighted mass
/// of instance pairs (p, q) with a_p dominating b_q. Always evaluates the
/// full m_a * m_b pair grid.
inline double dominance_probability(const UncertainObject& a,
                                    const UncertainObject& b,
                                    DominanceStats* stats = nullptr) {
  if (a.dims() != b.dims())
    throw std::invalid_argument("dominance_probability: dimension mismatch");
  double total = 0.0;
  for (int p = 0; p < a.instance_count(); ++p) {
    const auto ap = a.instance_values(p);
    double hit_mass = 0.0;
    for (int q = 0; q < b.instance_count(); ++q) {
      if (dominates(ap, b.instance_values(q))) hit_mass += b.instance_probability(q);
    }
    total += a.instance_probability(p) * hit_mass;
  }
  if (stats)
    stats->instance_pair_comparisons +=
        static_cast<std::uint64_t>(a.instance_count()) * b.instance_count();
  return total;
}

namespace detail {

/// Datasets above this size accumulate survival products in log space to
/// avoid underflow on long factor chains.
constexpr std::size_t kLogSpaceThreshold = 1000;

/// Running product of survival factors (1 - P(v dominates u)) in dataset
/// order. Both the filtering path and the full-scan reference use this same
/// accumulator, so their rounding behavior is identical factor by factor.
/// The partial value never increases, which is what makes rejecting at the
/// first partial below alpha equivalent to rejecting on the final value.
class SurvivalAccumulator {
 public:
  explicit SurvivalAccumulator(bool log_space) : log_space_(log_space) {}

  void multiply(double dominance_prob) {
    if (log_space_)
      log_sum_ += std::log1p(-dominance_prob);
    else
      product_ *= 1.0 - dominance_prob;
  }

  bool below(double alpha) const {
    if (log_space_) return log_sum_ < std::log(alpha);
    return product_ < alpha;
  }

  double value() const { return log_space_ ? std::exp(log_sum_) : product_; }

 private:
  bool log_space_;
  double product_ = 1.0;
  double log_sum_ = 0.0;
};

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in [0, 1]");
}

}  // namespace detail

/// Probability that `u` belongs to the skyline of `dataset`: the product of
/// survival factors against every other object. If `u` itself appears in the
/// dataset (matched by object id) it is skipped.
inline double skyline_probability(const UncertainObject& u,
                                  std::span<const UncertainObject> dataset,
                                  DominanceStats* stats = nullptr) {
  detail::SurvivalAccumulator acc(dataset.size() > detail::kLogSpaceThreshold);
  for (const UncertainObject& v : dataset) {
    if (v.object_id() == u.object_id()) continue;
    acc.multiply(dominance_probability(v, u, stats));
  }
  return acc.value();
}

/// A window object that survived local filtering, with its exact local
/// skyline probability.
struct Candidate {
  UncertainObject object;
  double local_probability;
};

/// Filters a window dataset at threshold alpha. Each object's survival
/// product is accumulated in window order and the scan stops as soon as the
/// partial product drops below alpha; survivors therefore complete the full
/// scan and carry exact probabilities. alpha = 0 keeps everything, alpha = 1
/// keeps only objects never dominated with positive probability.
inline std::vector<Candidate> local_filter(std::span<const UncertainObject> dataset,
                                           double alpha, DominanceStats& stats) {
  detail::check_alpha(alpha);
  const bool log_space = dataset.size() > detail::kLogSpaceThreshold;
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UncertainObject& u = dataset[i];
    ++stats.objects_scanned;
    detail::SurvivalAccumulator acc(log_space);
    bool rejected = false;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
      if (j == i) continue;
      acc.multiply(dominance_probability(dataset[j], u, &stats));
      if (acc.below(alpha)) {
        rejected = true;
        break;
      }
    }
    if (!rejected) {
      out.push_back(Candidate{u, acc.value()});
      ++stats.candidates_emitted;
    }
  }
  return out;
}

/// Scored result entry: an object admitted to a skyline with its probability.
struct ScoredObject {
  ObjectId object_id;
  int node_id;
  double probability;
};

/// Reference implementation: exact skyline probability of every object via
/// full scans, no early termination, then thresholding at alpha. Work grows
/// as the full N^2 m^2 pair grid.
inline std::vector<ScoredObject> brute_force_skyline(
    std::span<const UncertainObject> dataset, double alpha,
    DominanceStats* stats = nullptr) {
  detail::check_alpha(alpha);
  const bool log_space = dataset.size() > detail::kLogSpaceThreshold;
  std::vector<ScoredObject> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UncertainObject& u = dataset[i];
    if (stats) ++stats->objects_scanned;
    detail::SurvivalAccumulator acc(log_space);
    for (std::size_t j = 0; j < dataset.size(); ++j) {
      if (j == i) continue;
      acc.multiply(dominance_probability(dataset[j], u, stats));
    }
    if (!acc.below(alpha)) {
      out.push_back(ScoredObject{u.object_id(), u.node_id(), acc.value()});
      if (stats) ++stats->candidates_emitted;
    }
  }
  return out;
}

/// Merges per-node candidate sets and re-filters the union at alpha, giving
/// each survivor its global skyline probability. Candidate order is node
/// order, then each node's emission order. A global probability can only
/// shrink relative to the local one, because the union adds potential
/// dominators and removes none.
inline std::vector<ScoredObject> global_aggregate(
    const std::vector<std::vector<Candidate>>& per_node_candidates, double alpha,
    DominanceStats* stats = nullptr) {
  std::vector<UncertainObject> merged;
  for (const auto& node_set : per_node_candidates)
    for (const Candidate& c : node_set) merged.push_back(c.object);
  DominanceStats local;
  DominanceStats& use = stats ? *stats : local;
  std::vector<Candidate> kept = local_filter(merged, alpha, use);
  std::vector<ScoredObject> out;
  out.reserve(kept.size());
  for (const Candidate& c : kept)
    out.push_back(ScoredObject{c.object.object_id(), c.object.node_id(),
                               c.local_probability});
  return out;
}

/// Writes scored objects as object_id,node_id,probability, highest
/// probability first; ties break on object id so output is reproducible.
inline void write_skyline_csv(std::ostream& out, std::vector<ScoredObject> rows) {
  std::sort(rows.begin(), rows.end(), [](const ScoredObject& a, const ScoredObject& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.object_id < b.object_id;
  });
  out << "object_id,node_id,probability\n";
  char buf[32];
  for (const ScoredObject& row : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", row.probability);
    out << row.object_id << ',' << row.node_id << ',' << buf << '\n';
  }
}

}  // namespace sapsky
