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
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sapsky {

using ObjectId = std::int64_t;

/// One possible realization of an uncertain object: a point in attribute
/// space together with its existence probability.
struct Instance {
  std::vector<double> values;
  double probability = 0.0;
};

/// An uncertain data object: a small set of weighted instances sharing one
/// dimensionality. Instance probabilities must be positive and sum to at
/// most one; mass below one models the chance that the object does not
/// materialize at all. Instances are stored flat so dominance loops stay on
/// contiguous memory.
class UncertainObject {
 public:
  UncertainObject(ObjectId object_id, int node_id, std::int64_t arrival_step,
                  const std::vector<Instance>& instances)
      : object_id_(object_id), node_id_(node_id), arrival_step_(arrival_step) {
    if (instances.empty())
      throw std::invalid_argument("UncertainObject: needs at least one instance");
    dims_ = static_cast<int>(instances.front().values.size());
    if (dims_ == 0)
      throw std::invalid_argument("UncertainObject: instances need at least one dimension");
    count_ = static_cast<int>(instances.size());
    values_.reserve(static_cast<std::size_t>(count_) * dims_);
    probabilities_.reserve(count_);
    double mass = 0.0;
    for (const Instance& inst : instances) {
      if (static_cast<int>(inst.values.size()) != dims_)
        throw std::invalid_argument("UncertainObject: mixed instance dimensionality");
      if (inst.probability <= 0.0)
        throw std::invalid_argument("UncertainObject: instance probability must be positive");
      mass += inst.probability;
      values_.insert(values_.end(), inst.values.begin(), inst.values.end());
      probabilities_.push_back(inst.probability);
    }
    if (mass > 1.0 + kMassTolerance)
      throw std::invalid_argument("UncertainObject: instance probabilities sum to " +
                                  std::to_string(mass) + ", above one");
  }

  ObjectId object_id() const { return object_id_; }
  int node_id() const { return node_id_; }
  std::int64_t arrival_step() const { return arrival_step_; }
  int dims() const { return dims_; }
  int instance_count() const { return count_; }

  std::span<const double> instance_values(int index) const {
    return {values_.data() + static_cast<std::size_t>(index) * dims_,
            static_cast<std::size_t>(dims_)};
  }

  double instance_probability(int index) const { return probabilities_[index]; }

  Instance instance(int index) const {
    auto view = instance_values(index);
    return Instance{{view.begin(), view.end()}, probabilities_[index]};
  }

  /// Total existence mass; 1 unless the generator withheld some.
  double existence_mass() const {
    double mass = 0.0;
    for (double p : probabilities_) mass += p;
    return mass;
  }

 private:
  static constexpr double kMassTolerance = 1e-9;

  ObjectId object_id_;
  int node_id_;
  std::int64_t arrival_step_;
  int dims_ = 0;
  int count_ = 0;
  std::vector<double> values_;
  std::vector<double> probabilities_;
};

}  // namespace sapsky
