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
#include "sapsky/env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sapsky/rng.hpp"

namespace sapsky {
namespace {

EnvConfig small_config() {
  EnvConfig cfg;
  cfg.k_nodes = 3;
  cfg.stream.distribution = Distribution::independent;
  cfg.stream.arrival_rate = 2.0;
  cfg.stream.seed = 1;
  cfg.window_capacity = 120;
  cfg.broker_window_capacity = 300;
  cfg.cost.kappa = 1e-7;
  cfg.cost.omega_bits = 1000.0;
  cfg.cost.bandwidth_bps = 1e6;
  cfg.cost.mu = mu_for_target_rho(cfg.k_nodes, cfg.stream.arrival_rate, 0.9);
  cfg.cost.c_max = 1.0;
  cfg.cost.l_max = 1.0;
  cfg.t_max = 30;
  cfg.warmup_steps = 10;
  return cfg;
}

TEST(EdgeCloudEnvTest, ResetIsDeterministicAndForgetsHistory) {
  EdgeCloudEnv a(small_config());
  EdgeCloudEnv b(small_config());
  const auto sa = a.reset(11);
  const auto sb = b.reset(11);
  EXPECT_EQ(sa, sb);

  // Burn through most of an episode with varying actions, then reset again:
  // the new episode must match a fresh environment exactly.
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> alphas(3);
    for (double& x : alphas) x = rng.uniform(0.001, 0.9);
    a.step(alphas);
  }
  const auto sa2 = a.reset(11);
  EXPECT_EQ(sa2, sb);

  // A different seed gives a different stream.
  EXPECT_NE(a.reset(12), sb);
}

TEST(EdgeCloudEnvTest, WarmupLambdasTrackConfiguredRate) {
  EnvConfig cfg = small_config();
  cfg.k_nodes = 5;
  cfg.cost.mu = mu_for_target_rho(5, cfg.stream.arrival_rate, 0.9);
  EdgeCloudEnv env(cfg);
  env.reset(3);
  const SystemState st = env.sim().observe();
  ASSERT_EQ(st.lambdas.size(), 5u);
  double mean = 0.0;
  for (double l : st.lambdas) mean += l;
  mean /= 5.0;
  // 25 Poisson(2) samples inform the trailing means: stddev of the grand
  // mean is sqrt(2/25) ~ 0.28, so 3 sigma is ~0.85.
  EXPECT_NEAR(mean, cfg.stream.arrival_rate, 0.85);
  for (double s : st.sigmas) EXPECT_GT(s, 0.0);
}

TEST(EdgeCloudEnvTest, StateLayoutIsFixedAndScalingIsLinear) {
  EnvConfig cfg = small_config();
  cfg.k_nodes = 5;
  cfg.cost.mu = mu_for_target_rho(5, cfg.stream.arrival_rate, 0.9);
  EdgeCloudEnv env(cfg);
  const auto state = env.reset(7);
  ASSERT_EQ(state.size(), 17u);
  EXPECT_EQ(env.state_width(), 17);
  for (double v : state) EXPECT_TRUE(std::isfinite(v));

  // The flattening is linear in every raw feature, so a zero state maps to
  // the zero vector and reference values land at one half.
  SystemState zero;
  zero.lambdas.assign(5, 0.0);
  zero.sigmas.assign(5, 0.0);
  zero.density.assign(5, 0.0);
  const auto flat = flatten_system_state(zero, 2.0, 0.05, 1e6);
  ASSERT_EQ(flat.size(), 17u);
  for (double v : flat) EXPECT_EQ(v, 0.0);

  SystemState ref;
  ref.lambdas.assign(5, 2.0);           // the reference rate itself
  ref.sigmas.assign(5, 2.0 * 0.05 * 0.05);
  ref.density.assign(5, -0.25);         // passed through unscaled
  ref.bandwidth_bps = 1e6;
  ref.queue_rho = 1.0;
  const auto half = flatten_system_state(ref, 2.0, 0.05, 1e6);
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(half[i], 0.5);
    EXPECT_DOUBLE_EQ(half[5 + i], 1.0);
    EXPECT_DOUBLE_EQ(half[10 + i], -0.25);
  }
  EXPECT_DOUBLE_EQ(half[15], 0.5);
  EXPECT_DOUBLE_EQ(half[16], 0.5);
}

TEST(EdgeCloudEnvTest, SameSeedAndActionsReplayIdentically) {
  EdgeCloudEnv a(small_config());
  EdgeCloudEnv b(small_config());
  a.reset(21);
  b.reset(21);
  Rng actions(77);
  for (int t = 0; t < 25; ++t) {
    std::vector<double> alphas(3);
    for (double& x : alphas) x = actions.uniform(0.001, 0.9);
    const StepOutcome oa = a.step(alphas);
    const StepOutcome ob = b.step(alphas);
    EXPECT_EQ(oa.reward, ob.reward);
    EXPECT_EQ(oa.state, ob.state);
    EXPECT_EQ(oa.done, ob.done);
  }
}

TEST(EdgeCloudEnvTest, UnstableQueueIncursThePenalty) {
  EnvConfig cfg = small_config();
  cfg.cost.mu = 0.5;  // offered load is ~6 objects/step at alpha_min
  cfg.instability_penalty = 10.0;
  EdgeCloudEnv env(cfg);
  env.reset(4);
  const std::vector<double> open(3, cfg.alpha_min);
  const StepOutcome out = env.step(open);
  EXPECT_FALSE(out.costs.stable);
  EXPECT_GE(out.costs.rho, 1.0);
  EXPECT_LE(out.reward, -10.0);
  EXPECT_TRUE(std::isfinite(out.reward));
}

TEST(EdgeCloudEnvTest, RewardIsNonPositiveAndFinite) {
  EdgeCloudEnv env(small_config());
  env.reset(8);
  Rng actions(5);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> alphas(3);
    for (double& x : alphas) x = actions.uniform(0.001, 0.9);
    const StepOutcome out = env.step(alphas);
    EXPECT_LE(out.reward, 0.0);
    EXPECT_TRUE(std::isfinite(out.reward));
  }
}

TEST(EdgeCloudEnvTest, MaxThresholdCollapsesSelectivityAndTransmission) {
  EnvConfig cfg = small_config();
  // Correlated streams have small skylines, so an aggressive threshold
  // should squeeze the candidate sets towards nothing.
  cfg.stream.distribution = Distribution::correlated;
  cfg.t_max = 60;
  EdgeCloudEnv tight(cfg);
  EdgeCloudEnv open(cfg);
  tight.reset(31);
  open.reset(31);
  const std::vector<double> a_hi(3, cfg.alpha_max);
  const std::vector<double> a_lo(3, cfg.alpha_min);
  double sel_hi = 0.0, sel_lo = 0.0, trans_hi = 0.0, trans_lo = 0.0, comp_hi = 0.0;
  for (int t = 0; t < 40; ++t) {
    const StepOutcome oh = tight.step(a_hi);
    const StepOutcome ol = open.step(a_lo);
    for (double s : oh.costs.selectivity) sel_hi += s;
    for (double s : ol.costs.selectivity) sel_lo += s;
    for (double x : oh.costs.trans_seconds) trans_hi += x;
    for (double x : ol.costs.trans_seconds) trans_lo += x;
    for (double c : oh.costs.comp_seconds) comp_hi += c;
  }
  EXPECT_LT(sel_hi / (40.0 * 3.0), 0.1);  // mean survivor fraction near zero
  EXPECT_LT(sel_hi, 0.25 * sel_lo);
  EXPECT_LT(trans_hi, 0.25 * trans_lo);
  // Aggressive filtering leaves computation as the dominant cost driver.
  EXPECT_GT(comp_hi, trans_hi);
}

TEST(EdgeCloudSimTest, CandidateCountNonIncreasingInAlpha) {
  const EnvConfig cfg = small_config();
  EdgeCloudSim lo(cfg, 17);
  EdgeCloudSim hi(cfg, 17);
  std::vector<double> alphas_lo = {0.01, 0.1, 0.1};
  std::vector<double> alphas_hi = {0.50, 0.1, 0.1};
  for (int t = 0; t < 25; ++t) {
    const StepRecord rl = lo.advance(alphas_lo, false);
    const StepRecord rh = hi.advance(alphas_hi, false);
    // Same seed means identical windows, so counts are comparable per step.
    EXPECT_GE(rl.candidate_counts[0], rh.candidate_counts[0]);
    EXPECT_EQ(rl.candidate_counts[1], rh.candidate_counts[1]);
    EXPECT_EQ(rl.candidate_counts[2], rh.candidate_counts[2]);
  }
}

TEST(EdgeCloudSimTest, PassthroughSkipsDominanceWorkAndForwardsArrivals) {
  EnvConfig cfg = small_config();
  cfg.measure_broker = true;
  EdgeCloudSim sim(cfg, 9);
  const std::vector<double> none(3, 0.0);
  std::int64_t forwarded = 0;
  for (int t = 0; t < 10; ++t) {
    const StepRecord rec = sim.advance(none, true);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(rec.edge_comparisons[i], 0u);
      EXPECT_EQ(rec.costs.comp_seconds[i], 0.0);
      EXPECT_EQ(rec.transmitted[i], rec.arrivals[i]);
      EXPECT_EQ(static_cast<std::int64_t>(rec.candidate_counts[i]), rec.arrivals[i]);
      forwarded += rec.transmitted[i];
    }
  }
  EXPECT_EQ(static_cast<std::int64_t>(sim.broker_window().size()), forwarded);

  // The measured reference pass visits the full pair grid of the broker
  // window: N(N-1) object pairs, m*m instance pairs each.
  const StepRecord rec = sim.advance(none, true);
  const double n = static_cast<double>(sim.broker_window().size());
  const int m = cfg.stream.instances_per_object;
  EXPECT_EQ(static_cast<double>(rec.cloud_comparisons), n * (n - 1) * m * m);
}

TEST(EdgeCloudSimTest, ObjectQuotaCapsGeneration) {
  EnvConfig cfg = small_config();
  cfg.object_quota = 40;
  EdgeCloudSim sim(cfg, 13);
  const std::vector<double> alphas(3, 0.02);
  for (int t = 0; t < 60; ++t) sim.advance(alphas, false);
  EXPECT_EQ(sim.total_generated(), 40);
  EXPECT_TRUE(sim.quota_exhausted());
  const StepRecord rec = sim.advance(alphas, false);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(rec.arrivals[i], 0);
}

TEST(EdgeCloudSimTest, BandwidthScheduleChangesUplinkAndState) {
  EnvConfig cfg = small_config();
  cfg.bandwidth_schedule = {{0, 1e6}, {5, 1e5}};
  EdgeCloudSim sim(cfg, 2);
  EXPECT_DOUBLE_EQ(sim.bandwidth_at(1), 1e6);
  EXPECT_DOUBLE_EQ(sim.bandwidth_at(4), 1e6);
  EXPECT_DOUBLE_EQ(sim.bandwidth_at(5), 1e5);
  EXPECT_DOUBLE_EQ(sim.bandwidth_at(100), 1e5);

  const std::vector<double> none(3, 0.0);
  for (int t = 0; t < 4; ++t) sim.advance(none, true);
  // Next step is 5: the state advertises the upcoming narrow uplink,
  // scaled against the configured reference bandwidth.
  EXPECT_DOUBLE_EQ(sim.observe().bandwidth_bps, 1e5);
  const StepRecord rec = sim.advance(none, true);
  for (int i = 0; i < 3; ++i)
    EXPECT_DOUBLE_EQ(rec.costs.trans_seconds[i], rec.transmitted[i] * 1000.0 / 1e5);
}

TEST(EdgeCloudEnvTest, EpisodeRunsForExactlyTMaxSteps) {
  EnvConfig cfg = small_config();
  cfg.t_max = 15;
  EdgeCloudEnv env(cfg);
  EXPECT_THROW(env.step(std::vector<double>(3, 0.1)), std::logic_error);
  env.reset(1);
  const std::vector<double> alphas(3, 0.1);
  for (int t = 1; t <= 15; ++t) {
    const StepOutcome out = env.step(alphas);
    EXPECT_EQ(out.done, t == 15);
  }
  EXPECT_THROW(env.step(alphas), std::logic_error);
}

TEST(EdgeCloudEnvTest, ActionWidthIsValidated) {
  EdgeCloudEnv env(small_config());
  env.reset(1);
  EXPECT_THROW(env.step(std::vector<double>(2, 0.1)), std::invalid_argument);
}

TEST(ProfileNormalizationTest, ProducesPositiveDeterministicBounds) {
  EnvConfig cfg = small_config();
  cfg.window_capacity = 60;  // keep the profiling run cheap
  const NormalizationProfile a = profile_normalization(cfg, 5, 20);
  const NormalizationProfile b = profile_normalization(cfg, 5, 20);
  EXPECT_GT(a.c_max, 0.0);
  EXPECT_GT(a.l_max, 0.0);
  EXPECT_EQ(a.c_max, b.c_max);
  EXPECT_EQ(a.l_max, b.l_max);
  // The end-to-end bound includes the slowest node's computation, so it
  // cannot be smaller than the summed computation divided by node count.
  EXPECT_GE(a.l_max, a.c_max / cfg.k_nodes);
}

}  // namespace
}  // namespace sapsky
