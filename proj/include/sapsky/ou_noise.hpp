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
#include <stdexcept>
#include <vector>

#include "sapsky/rng.hpp"

namespace sapsky {

/// Mean-reverting exploration noise, one component per action dimension:
/// x <- x + theta * (mean - x) + sigma * N(0,1), unit time step. Successive
/// samples are temporally correlated, which explores a continuous action
/// space more coherently than white noise.
class OuNoise {
 public:
  OuNoise(int dims, double theta, double sigma, double mean = 0.0)
      : theta_(theta), sigma_(sigma), mean_(mean), state_(dims, mean) {
    if (dims < 1) throw std::invalid_argument("ou noise: dims must be positive");
    if (theta < 0.0 || theta > 1.0)
      throw std::invalid_argument("ou noise: theta must be in [0, 1]");
    if (sigma < 0.0) throw std::invalid_argument("ou noise: sigma must be >= 0");
  }

  /// Resets the path to its mean, typically at episode boundaries.
  void reset() { std::fill(state_.begin(), state_.end(), mean_); }

  void set_state(std::vector<double> state) {
    if (state.size() != state_.size())
      throw std::invalid_argument("ou noise: state width mismatch");
    state_ = std::move(state);
  }

  const std::vector<double>& step(Rng& rng) {
    for (double& x : state_)
      x += theta_ * (mean_ - x) + sigma_ * rng.normal();
    return state_;
  }

  const std::vector<double>& state() const { return state_; }
  double sigma() const { return sigma_; }

  /// Per-episode exploration decay with a floor.
  void decay_sigma(double factor, double floor) {
    sigma_ = std::max(floor, sigma_ * factor);
  }

 private:
  double theta_;
  double sigma_;
  double mean_;
  std::vector<double> state_;
};

}  // namespace sapsky
