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
#include <vector>

#include "sapsky/cost_model.hpp"

namespace sapsky {

struct StepOutcome {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
  StepCosts costs;
};

/// Episodic control interface the agent trains against: observe a state,
/// choose one filtering threshold per node, receive a cost-shaped reward.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int state_width() const = 0;
  virtual int action_width() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepOutcome step(std::span<const double> alphas) = 0;
};

}  // namespace sapsky
