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
#include <span>
#include <stdexcept>
#include <vector>

#include "sapsky/environment.hpp"
#include "sapsky/rng.hpp"

namespace sapsky {

/// Closed-form single-node stand-in for the edge/cloud simulator. The three
/// cost terms keep the shape of the real pipeline, but every quantity is an
/// analytic function of the threshold, so the per-state optimum is computable
/// by grid search and a learner can be judged against it exactly.
///
///   work(a)  = phi0 + (1 - phi0) * a^1.5          rises with the threshold
///   sel(a)   = (1 - a)^q,  q = q0 + q1 * theta    falls with the threshold
///   rho(a)   = rho_peak * r * sel(a)              queue utilization
///   cost(a)  = w_work * work + w_trans * r * sel + w_queue * rho / (1 - rho)
///
/// The exogenous drivers r (traffic level) and theta (selectivity pressure)
/// follow slow reflected random walks; the observed state is exactly (r,
/// theta), so the optimal threshold is a deterministic function of the state.
struct SyntheticParams {
  double alpha_min = 0.01;
  double alpha_max = 0.99;
  double phi0 = 0.1;              // dominance work that no threshold removes
  double work_exponent = 1.5;
  double q0 = 2.0;                // selectivity decay at theta = 0
  double q1 = 2.0;                // extra decay per unit of theta
  double r_low = 0.5;             // traffic level range
  double r_high = 1.0;
  // Utilization when nothing is filtered. Above 1 on purpose: an unfiltered
  // peak stream overloads the queue, as in the full pipeline, so the penalty
  // branch is part of the landscape a learner must steer clear of.
  double rho_peak = 1.2;
  double w_work = 0.5;
  double w_trans = 0.5;
  double w_queue = 0.2;
  double walk_step = 0.02;        // random-walk stddev per step, both drivers
  int t_max = 64;
  double instability_penalty = 10.0;

  void validate() const {
    if (!(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max <= 1.0))
      throw std::invalid_argument("synthetic env: bad threshold bounds");
    if (!(phi0 > 0.0 && phi0 < 1.0))
      throw std::invalid_argument("synthetic env: phi0 must be in (0, 1)");
    if (!(work_exponent > 1.0))
      throw std::invalid_argument("synthetic env: work exponent must exceed 1");
    if (!(q0 > 1.0) || q1 < 0.0)
      throw std::invalid_argument("synthetic env: selectivity decay must exceed 1");
    if (!(r_low > 0.0 && r_low <= r_high && r_high <= 1.0))
      throw std::invalid_argument("synthetic env: bad traffic range");
    if (!(rho_peak > 0.0))
      throw std::invalid_argument("synthetic env: rho_peak must be positive");
    if (w_work < 0.0 || w_trans < 0.0 || w_queue < 0.0)
      throw std::invalid_argument("synthetic env: negative cost weight");
    if (walk_step < 0.0) throw std::invalid_argument("synthetic env: negative walk step");
    if (t_max < 1) throw std::invalid_argument("synthetic env: t_max must be positive");
  }
};

namespace detail {

inline double reflect_into(double x, double lo, double hi) {
  // One reflection is enough for the small steps used here.
  if (x < lo) x = lo + (lo - x);
  if (x > hi) x = hi - (x - hi);
  return std::clamp(x, lo, hi);
}

}  // namespace detail

inline double synthetic_work(double alpha, const SyntheticParams& p) {
  return p.phi0 + (1.0 - p.phi0) * std::pow(alpha, p.work_exponent);
}

inline double synthetic_selectivity(double alpha, double theta, const SyntheticParams& p) {
  return std::pow(1.0 - alpha, p.q0 + p.q1 * theta);
}

/// Instantaneous cost at threshold `alpha` under drivers (r, theta). An
/// unstable queue (rho >= 1) maps to the instability penalty instead of the
/// diverging waiting term.
inline double synthetic_cost(double alpha, double r, double theta, const SyntheticParams& p) {
  const double work = synthetic_work(alpha, p);
  const double sel = synthetic_selectivity(alpha, theta, p);
  const double rho = p.rho_peak * r * sel;
  double queue;
  if (rho >= 1.0) {
    queue = p.instability_penalty;
  } else {
    queue = rho / (1.0 - rho);
  }
  return p.w_work * work + p.w_trans * r * sel + p.w_queue * queue;
}

/// Grid-search oracle for the per-state optimum.
inline double synthetic_optimal_alpha(double r, double theta, const SyntheticParams& p,
                                      int grid_points = 981) {
  if (grid_points < 2) throw std::invalid_argument("optimal_alpha: need at least 2 grid points");
  double best_alpha = p.alpha_min;
  double best_cost = synthetic_cost(p.alpha_min, r, theta, p);
  for (int i = 1; i < grid_points; ++i) {
    const double a =
        p.alpha_min + (p.alpha_max - p.alpha_min) * static_cast<double>(i) / (grid_points - 1);
    const double c = synthetic_cost(a, r, theta, p);
    if (c < best_cost) {
      best_cost = c;
      best_alpha = a;
    }
  }
  return best_alpha;
}

class SyntheticConvexEnv final : public Environment {
 public:
  explicit SyntheticConvexEnv(SyntheticParams params) : params_(params) { params_.validate(); }

  int state_width() const override { return 2; }
  int action_width() const override { return 1; }

  std::vector<double> reset(std::uint64_t seed) override {
    rng_ = Rng(derive_seed(seed, 0x5E11));
    r_ = params_.r_low + (params_.r_high - params_.r_low) * rng_.uniform();
    theta_ = rng_.uniform();
    step_ = 0;
    done_ = false;
    started_ = true;
    return state();
  }

  StepOutcome step(std::span<const double> action) override {
    if (!started_) throw std::logic_error("synthetic env: step before reset");
    if (done_) throw std::logic_error("synthetic env: step after episode end");
    if (action.size() != 1) throw std::invalid_argument("synthetic env: action width must be 1");
    const double alpha = std::clamp(action[0], params_.alpha_min, params_.alpha_max);

    StepOutcome out;
    out.reward = -synthetic_cost(alpha, r_, theta_, params_);
    out.costs.selectivity = {synthetic_selectivity(alpha, theta_, params_)};
    out.costs.rho = params_.rho_peak * r_ * out.costs.selectivity[0];
    out.costs.stable = out.costs.rho < 1.0;
    out.costs.cost = -out.reward;

    r_ = detail::reflect_into(r_ + params_.walk_step * rng_.normal(), params_.r_low,
                              params_.r_high);
    theta_ = detail::reflect_into(theta_ + params_.walk_step * rng_.normal(), 0.0, 1.0);

    ++step_;
    done_ = step_ >= params_.t_max;
    out.done = done_;
    out.state = state();
    return out;
  }

  double traffic_level() const { return r_; }
  double selectivity_pressure() const { return theta_; }
  const SyntheticParams& params() const { return params_; }

  std::vector<double> state() const { return {r_, theta_}; }

 private:
  SyntheticParams params_;
  Rng rng_{1};
  double r_ = 0.0;
  double theta_ = 0.0;
  int step_ = 0;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace sapsky
