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

#include "sapsky/replay_buffer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace sapsky;

namespace {

Transition make(double reward) {
  return Transition{{reward}, {0.5}, reward, {reward + 1.0}};
}

}  // namespace

TEST(Replay, ConstructionGuards) {
  EXPECT_THROW(PrioritizedReplay(0, 0.6, 1e-3), std::invalid_argument);
  EXPECT_THROW(PrioritizedReplay(8, -1.0, 1e-3), std::invalid_argument);
  EXPECT_THROW(PrioritizedReplay(8, 0.6, 0.0), std::invalid_argument);
}

TEST(Replay, SampleFromEmptyThrows) {
  PrioritizedReplay buf(8, 0.6, 1e-3);
  Rng rng(1);
  EXPECT_THROW(buf.sample(4, 0.4, rng), std::logic_error);
}

TEST(Replay, RingOverwritesOldest) {
  PrioritizedReplay buf(2, 0.0, 1e-3);  // exponent 0: uniform sampling
  buf.store(make(1.0));
  buf.store(make(2.0));
  buf.store(make(3.0));
  EXPECT_EQ(buf.size(), 2u);
  Rng rng(2);
  std::set<double> rewards;
  for (int i = 0; i < 200; ++i) {
    const auto s = buf.sample(1, 1.0, rng);
    rewards.insert(s.items[0]->reward);
  }
  EXPECT_EQ(rewards, (std::set<double>{2.0, 3.0}));
}

TEST(Replay, UniformWhenPrioritiesEqual) {
  PrioritizedReplay buf(16, 0.6, 1e-3);
  const int n = 10;
  for (int i = 0; i < n; ++i) buf.store(make(i));
  Rng rng(3);
  std::vector<int> counts(n, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto s = buf.sample(1, 1.0, rng);
    ++counts[static_cast<int>(s.items[0]->reward)];
  }
  // Each frequency within 3 sigma of draws/n.
  const double expected = static_cast<double>(draws) / n;
  const double sigma = std::sqrt(expected * (1.0 - 1.0 / n));
  for (int c : counts) EXPECT_NEAR(c, expected, 3.0 * sigma);
  // Equal priorities also mean equal importance weights, normalized to 1.
  const auto s = buf.sample(5, 0.7, rng);
  for (double w : s.weights) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(Replay, PriorityDrivesSamplingMass) {
  PrioritizedReplay buf(8, 1.0, 1e-3);  // exponent 1 makes mass arithmetic exact
  buf.store(make(0.0));
  buf.store(make(1.0));
  const std::vector<std::size_t> idx{0, 1};
  const std::vector<double> td{2.999, 0.999};  // priorities 3.0 and 1.0
  buf.update_priorities(idx, td);
  EXPECT_NEAR(buf.sampling_probability(0), 0.75, 1e-12);
  EXPECT_NEAR(buf.sampling_probability(1), 0.25, 1e-12);
  Rng rng(4);
  int heavy = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto s = buf.sample(1, 0.4, rng);
    if (s.items[0]->reward == 0.0) ++heavy;
  }
  EXPECT_NEAR(static_cast<double>(heavy) / draws, 0.75, 0.02);
}

TEST(Replay, DominantPriorityAppearsInAlmostEveryBatch) {
  PrioritizedReplay buf(32, 1.0, 1e-6);
  for (int i = 0; i < 20; ++i) buf.store(make(i));
  std::vector<std::size_t> idx;
  std::vector<double> td;
  for (std::size_t i = 0; i < 20; ++i) {
    idx.push_back(i);
    td.push_back(i == 7 ? 1e6 : 1.0);
  }
  buf.update_priorities(idx, td);
  Rng rng(5);
  int batches_with_dominant = 0;
  const int batches = 2000;
  for (int b = 0; b < batches; ++b) {
    const auto s = buf.sample(8, 0.4, rng);
    for (const Transition* t : s.items)
      if (t->reward == 7.0) {
        ++batches_with_dominant;
        break;
      }
  }
  EXPECT_GE(batches_with_dominant, static_cast<int>(0.99 * batches));
}

TEST(Replay, NewTransitionsEnterAtMaxPriority) {
  PrioritizedReplay buf(8, 1.0, 1e-3);
  buf.store(make(0.0));
  const std::vector<std::size_t> idx{0};
  const std::vector<double> td{9.999};  // priority 10
  buf.update_priorities(idx, td);
  buf.store(make(1.0));  // must enter at priority 10, not 1
  EXPECT_NEAR(buf.sampling_probability(1), 0.5, 1e-12);
}

TEST(Replay, ImportanceWeightsCorrectBias) {
  PrioritizedReplay buf(8, 1.0, 1e-3);
  buf.store(make(0.0));
  buf.store(make(1.0));
  const std::vector<std::size_t> idx{0, 1};
  const std::vector<double> td{3.999, 0.999};  // masses 0.8 / 0.2
  buf.update_priorities(idx, td);
  Rng rng(6);
  // At beta=1 the weight ratio is the inverse mass ratio; rare item gets 1.
  for (int i = 0; i < 50; ++i) {
    const auto s = buf.sample(16, 1.0, rng);
    bool saw_both = false;
    for (std::size_t k = 0; k < s.items.size(); ++k) {
      ASSERT_LE(s.weights[k], 1.0 + 1e-12);
      if (s.items[k]->reward == 0.0 && s.weights[k] < 1.0) saw_both = true;
    }
    if (saw_both) {
      for (std::size_t k = 0; k < s.items.size(); ++k) {
        if (s.items[k]->reward == 0.0) EXPECT_NEAR(s.weights[k], 0.25, 1e-12);
        if (s.items[k]->reward == 1.0) EXPECT_NEAR(s.weights[k], 1.0, 1e-12);
      }
      return;
    }
  }
  FAIL() << "never sampled both items in one batch";
}

TEST(Replay, UpdateGuards) {
  PrioritizedReplay buf(8, 0.6, 1e-3);
  buf.store(make(0.0));
  const std::vector<std::size_t> idx{0, 1};
  const std::vector<double> one{0.5};
  EXPECT_THROW(buf.update_priorities(idx, one), std::invalid_argument);
  const std::vector<std::size_t> bad{5};
  const std::vector<double> td{0.5};
  EXPECT_THROW(buf.update_priorities(bad, td), std::out_of_range);
}

TEST(Replay, BetaAnnealsLinearlyToOne) {
  EXPECT_DOUBLE_EQ(annealed_beta(0.4, 0, 1000), 0.4);
  EXPECT_DOUBLE_EQ(annealed_beta(0.4, 500, 1000), 0.7);
  EXPECT_DOUBLE_EQ(annealed_beta(0.4, 1000, 1000), 1.0);
  EXPECT_DOUBLE_EQ(annealed_beta(0.4, 5000, 1000), 1.0);
  EXPECT_DOUBLE_EQ(annealed_beta(0.4, 0, 0), 1.0);
}
