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
#include "sapsky/policies.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace sapsky {
namespace {

TEST(PolicyTest, NoFilteringForwardsEverythingAtTheFloor) {
  Policy p = Policy::no_filtering(4, 0.001);
  EXPECT_EQ(p.kind(), PolicyKind::no_filtering);
  EXPECT_TRUE(p.passthrough());
  const std::vector<double> state(14, 0.3);
  const auto alphas = p.decide(state);
  ASSERT_EQ(alphas.size(), 4u);
  for (double a : alphas) EXPECT_DOUBLE_EQ(a, 0.001);
}

TEST(PolicyTest, FixedThresholdIsConstantRegardlessOfState) {
  Policy p = Policy::fixed_threshold(3, 0.02);
  EXPECT_FALSE(p.passthrough());
  const auto a1 = p.decide(std::vector<double>(11, 0.0));
  const auto a2 = p.decide(std::vector<double>(11, 0.9));
  EXPECT_EQ(a1, a2);
  for (double a : a1) EXPECT_DOUBLE_EQ(a, 0.02);
}

TEST(PolicyTest, MalformedConstructionFailsFast) {
  EXPECT_THROW(Policy::fixed_threshold(3, 1.5), std::invalid_argument);
  EXPECT_THROW(Policy::fixed_threshold(3, -0.1), std::invalid_argument);
  EXPECT_THROW(Policy::fixed_threshold(0, 0.02), std::invalid_argument);
  EXPECT_THROW(Policy::no_filtering(-1, 0.001), std::invalid_argument);

  MlpSpec spec;
  spec.widths = {2, 3};
  spec.output = Activation::sigmoid;
  EXPECT_THROW(Policy::sa_psky(Mlp(spec), 0.5, 0.1), std::invalid_argument);
}

TEST(PolicyTest, TrainedActorOutputIsRescaledIntoBounds) {
  MlpSpec spec;
  spec.widths = {2, 3};
  spec.output = Activation::sigmoid;
  Mlp actor(spec);  // zero weights: sigmoid(0) = 0.5 on every output
  Policy p = Policy::sa_psky(std::move(actor), 0.1, 0.9);
  EXPECT_EQ(p.kind(), PolicyKind::sa_psky);
  EXPECT_EQ(p.k_nodes(), 3);
  EXPECT_FALSE(p.passthrough());
  const auto alphas = p.decide(std::vector<double>{0.0, 0.0});
  ASSERT_EQ(alphas.size(), 3u);
  for (double a : alphas) EXPECT_DOUBLE_EQ(a, 0.5);
}

TEST(PolicyTest, KindNamesRoundTrip) {
  for (PolicyKind k : {PolicyKind::no_filtering, PolicyKind::fixed_threshold,
                       PolicyKind::sa_psky})
    EXPECT_EQ(parse_policy_kind(to_string(k)), k);
  EXPECT_THROW(parse_policy_kind("greedy"), std::invalid_argument);
}

}  // namespace
}  // namespace sapsky
