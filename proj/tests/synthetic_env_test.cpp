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
#include "sapsky/synthetic_env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace sapsky {
namespace {

TEST(SyntheticCostTest, TermsPullInOppositeDirections) {
  const SyntheticParams p;
  double prev_work = synthetic_work(0.0, p);
  double prev_sel = synthetic_selectivity(0.0, 0.5, p);
  for (int i = 1; i <= 50; ++i) {
    const double a = i / 50.0 * 0.98;
    const double work = synthetic_work(a, p);
    const double sel = synthetic_selectivity(a, 0.5, p);
    EXPECT_GT(work, prev_work);
    EXPECT_LT(sel, prev_sel);
    prev_work = work;
    prev_sel = sel;
  }
  EXPECT_NEAR(synthetic_work(0.0, p), p.phi0, 1e-15);
  EXPECT_NEAR(synthetic_selectivity(0.0, 0.0, p), 1.0, 1e-15);
}

TEST(SyntheticCostTest, CostIsConvexOnTheStableBranch) {
  const SyntheticParams p;
  for (double r : {0.5, 0.75, 1.0}) {
    for (double theta : {0.0, 0.5, 1.0}) {
      std::vector<double> costs;
      std::vector<bool> stable;
      for (int i = 0; i <= 200; ++i) {
        const double a = p.alpha_min + (p.alpha_max - p.alpha_min) * i / 200.0;
        costs.push_back(synthetic_cost(a, r, theta, p));
        stable.push_back(p.rho_peak * r * synthetic_selectivity(a, theta, p) < 1.0);
      }
      // Every term is convex in alpha while the queue stays stable, so
      // second differences are non-negative there and the valley is unique.
      for (std::size_t i = 1; i + 1 < costs.size(); ++i) {
        if (!stable[i - 1] || !stable[i] || !stable[i + 1]) continue;
        EXPECT_GE(costs[i - 1] + costs[i + 1] - 2.0 * costs[i], -1e-12)
            << "r=" << r << " theta=" << theta << " i=" << i;
      }
    }
  }
}

TEST(SyntheticCostTest, OverloadedChoicesNeverBeatTheValley) {
  // The penalty plateau where the queue melts down always loses to the
  // stable valley, so the global optimum is unique and stable.
  const SyntheticParams p;
  for (double r : {0.5, 0.75, 1.0}) {
    for (double theta : {0.0, 0.5, 1.0}) {
      const double star = synthetic_optimal_alpha(r, theta, p);
      const double best = synthetic_cost(star, r, theta, p);
      EXPECT_LT(p.rho_peak * r * synthetic_selectivity(star, theta, p), 1.0);
      for (int i = 0; i <= 200; ++i) {
        const double a = p.alpha_min + (p.alpha_max - p.alpha_min) * i / 200.0;
        if (p.rho_peak * r * synthetic_selectivity(a, theta, p) < 1.0) continue;
        EXPECT_GT(synthetic_cost(a, r, theta, p), best + 0.5);
      }
    }
  }
}

TEST(SyntheticCostTest, OptimumIsInteriorAndTracksTraffic) {
  const SyntheticParams p;
  for (double theta : {0.0, 0.5, 1.0}) {
    const double lo = synthetic_optimal_alpha(p.r_low, theta, p);
    const double hi = synthetic_optimal_alpha(p.r_high, theta, p);
    EXPECT_GT(lo, p.alpha_min + 0.02);
    EXPECT_LT(hi, p.alpha_max - 0.02);
    // Heavier traffic makes transmission and queueing dearer, so the
    // optimal threshold moves up.
    EXPECT_GT(hi, lo);
  }
}

TEST(SyntheticCostTest, GridOracleAgreesWithAFinerScan) {
  const SyntheticParams p;
  for (double r : {0.55, 0.9}) {
    for (double theta : {0.2, 0.8}) {
      const double coarse = synthetic_optimal_alpha(r, theta, p);
      const double fine = synthetic_optimal_alpha(r, theta, p, 9801);
      EXPECT_NEAR(coarse, fine, 2.0 * (p.alpha_max - p.alpha_min) / 980.0);
    }
  }
}

TEST(SyntheticCostTest, OverloadedQueueFallsBackToThePenalty) {
  SyntheticParams p;
  p.rho_peak = 1.3;  // an unfiltered stream now overwhelms the queue
  const double c = synthetic_cost(p.alpha_min, 1.0, 0.0, p);
  EXPECT_GE(c, p.w_queue * p.instability_penalty);
  EXPECT_TRUE(std::isfinite(c));
}

TEST(SyntheticEnvTest, EpisodesAreDeterministicAndBounded) {
  SyntheticParams p;
  p.t_max = 40;
  SyntheticConvexEnv a(p);
  SyntheticConvexEnv b(p);
  EXPECT_EQ(a.state_width(), 2);
  EXPECT_EQ(a.action_width(), 1);
  EXPECT_EQ(a.reset(19), b.reset(19));
  const std::vector<double> act{0.3};
  for (int t = 1; t <= 40; ++t) {
    const StepOutcome oa = a.step(act);
    const StepOutcome ob = b.step(act);
    EXPECT_EQ(oa.reward, ob.reward);
    EXPECT_EQ(oa.state, ob.state);
    EXPECT_EQ(oa.done, t == 40);
    ASSERT_EQ(oa.state.size(), 2u);
    EXPECT_GE(oa.state[0], p.r_low);
    EXPECT_LE(oa.state[0], p.r_high);
    EXPECT_GE(oa.state[1], 0.0);
    EXPECT_LE(oa.state[1], 1.0);
  }
  EXPECT_THROW(a.step(act), std::logic_error);
}

TEST(SyntheticEnvTest, RewardPeaksAtTheOracleThreshold) {
  const SyntheticParams p;
  SyntheticConvexEnv env(p);
  auto state = env.reset(33);
  for (int t = 0; t < 20; ++t) {
    const double star = synthetic_optimal_alpha(state[0], state[1], p);
    const double worse_lo = std::max(p.alpha_min, star - 0.2);
    const double worse_hi = std::min(p.alpha_max, star + 0.2);
    const double r_star = -synthetic_cost(star, state[0], state[1], p);
    EXPECT_GE(r_star, -synthetic_cost(worse_lo, state[0], state[1], p));
    EXPECT_GE(r_star, -synthetic_cost(worse_hi, state[0], state[1], p));
    state = env.step(std::vector<double>{star}).state;
  }
}

TEST(SyntheticEnvTest, StepBeforeResetIsRejected) {
  SyntheticConvexEnv env(SyntheticParams{});
  EXPECT_THROW(env.step(std::vector<double>{0.3}), std::logic_error);
  env.reset(1);
  EXPECT_THROW(env.step(std::vector<double>{0.3, 0.4}), std::invalid_argument);
}

}  // namespace
}  // namespace sapsky
