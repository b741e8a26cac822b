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
#include <span>
#include <stdexcept>
#include <vector>

#include "sapsky/rng.hpp"

namespace sapsky {

/// One environment interaction. Episodes end by truncation at the horizon,
/// not by reaching a terminal state, so the bootstrap target always uses the
/// next state.
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
};

/// Proportional prioritized replay over a ring buffer. Priorities are held
/// in a binary sum tree so sampling and updates are O(log n). New
/// transitions enter at the maximum priority seen so far, which guarantees
/// each is sampled at least once before its own TD error takes over.
class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity, double priority_exponent,
                    double min_priority)
      : capacity_(capacity),
        exponent_(priority_exponent),
        min_priority_(min_priority) {
    if (capacity == 0)
      throw std::invalid_argument("replay: capacity must be positive");
    if (priority_exponent < 0.0)
      throw std::invalid_argument("replay: priority exponent must be >= 0");
    if (min_priority <= 0.0)
      throw std::invalid_argument("replay: min priority must be positive");
    leaves_ = 1;
    while (leaves_ < capacity_) leaves_ *= 2;
    tree_.assign(2 * leaves_, 0.0);
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 20));
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  void store(Transition t) {
    const std::size_t slot = next_;
    if (items_.size() < capacity_)
      items_.push_back(std::move(t));
    else
      items_[slot] = std::move(t);
    next_ = (next_ + 1) % capacity_;
    set_leaf(slot, std::pow(max_priority_, exponent_));
  }

  struct Sample {
    std::vector<std::size_t> indices;
    std::vector<const Transition*> items;
    std::vector<double> weights;  // importance weights, max-normalized
  };

  /// Draws `batch` independent proportional samples. beta is the importance
  /// correction strength: 0 keeps raw proportional bias, 1 removes it.
  Sample sample(std::size_t batch, double beta, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("replay: sample from empty buffer");
    if (batch == 0) throw std::invalid_argument("replay: batch must be positive");
    const double total = tree_[1];
    Sample s;
    s.indices.reserve(batch);
    s.items.reserve(batch);
    s.weights.reserve(batch);
    const double n = static_cast<double>(items_.size());
    double max_weight = 0.0;
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t idx = locate(rng.uniform() * total);
      const double mass = tree_[leaves_ + idx] / total;
      const double weight = std::pow(n * mass, -beta);
      s.indices.push_back(idx);
      s.items.push_back(&items_[idx]);
      s.weights.push_back(weight);
      max_weight = std::max(max_weight, weight);
    }
    for (double& w : s.weights) w /= max_weight;
    return s;
  }

  /// Re-prioritizes sampled transitions with their fresh TD errors.
  void update_priorities(std::span<const std::size_t> indices,
                         std::span<const double> td_errors) {
    if (indices.size() != td_errors.size())
      throw std::invalid_argument("replay: index/error length mismatch");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] >= items_.size())
        throw std::out_of_range("replay: priority index out of range");
      const double p = std::fabs(td_errors[k]) + min_priority_;
      max_priority_ = std::max(max_priority_, p);
      set_leaf(indices[k], std::pow(p, exponent_));
    }
  }

  /// Probability mass currently assigned to one slot; test hook.
  double sampling_probability(std::size_t index) const {
    return tree_[leaves_ + index] / tree_[1];
  }

 private:
  void set_leaf(std::size_t index, double value) {
    std::size_t node = leaves_ + index;
    tree_[node] = value;
    for (node /= 2; node >= 1; node /= 2)
      tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
  }

  /// Descends the tree to the leaf owning the given cumulative mass.
  std::size_t locate(double mass) const {
    std::size_t node = 1;
    while (node < leaves_) {
      const double left = tree_[2 * node];
      if (mass < left) {
        node = 2 * node;
      } else {
        mass -= left;
        node = 2 * node + 1;
      }
    }
    std::size_t idx = node - leaves_;
    if (idx >= items_.size()) idx = items_.size() - 1;  // guards rounding at the edge
    return idx;
  }

  std::size_t capacity_;
  double exponent_;
  double min_priority_;
  std::size_t leaves_;
  std::vector<double> tree_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
};

/// Linear annealing schedule for the importance correction beta.
inline double annealed_beta(double beta0, std::int64_t step, std::int64_t horizon) {
  if (horizon <= 0) return 1.0;
  const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(horizon));
  return beta0 + (1.0 - beta0) * f;
}

}  // namespace sapsky
