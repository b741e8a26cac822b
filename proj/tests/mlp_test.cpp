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

#include "sapsky/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace sapsky;

namespace {

// Scalar loss used by the finite-difference checks: a fixed random linear
// functional of the network output.
double probe_loss(Mlp& net, std::span<const double> in, std::span<const double> aux,
                  const std::vector<double>& coeffs) {
  const auto& out = net.forward(in, aux);
  double loss = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) loss += coeffs[k] * out[k];
  return loss;
}

// Largest mismatch between backprop and central finite differences over all
// parameters, input coordinates and aux coordinates. Relative to the larger
// magnitude, floored at 1 so near-zero gradients compare absolutely.
double max_gradient_error(Mlp& net, Rng& rng) {
  std::vector<double> in(net.input_width());
  for (double& x : in) x = rng.uniform(-1.0, 1.0);
  std::vector<double> aux(net.aux_width());
  for (double& x : aux) x = rng.uniform(-1.0, 1.0);
  std::vector<double> coeffs(net.output_width());
  for (double& c : coeffs) c = rng.uniform(-1.0, 1.0);

  probe_loss(net, in, aux, coeffs);
  const auto grads = net.backward(coeffs);

  const double h = 1e-6;
  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    const double err = std::fabs(analytic - numeric) /
                       std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    worst = std::max(worst, err);
  };
  auto& params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = probe_loss(net, in, aux, coeffs);
    params[i] = keep - h;
    const double down = probe_loss(net, in, aux, coeffs);
    params[i] = keep;
    compare(grads.params[i], (up - down) / (2.0 * h));
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double keep = in[i];
    in[i] = keep + h;
    const double up = probe_loss(net, in, aux, coeffs);
    in[i] = keep - h;
    const double down = probe_loss(net, in, aux, coeffs);
    in[i] = keep;
    compare(grads.input[i], (up - down) / (2.0 * h));
  }
  for (std::size_t i = 0; i < aux.size(); ++i) {
    const double keep = aux[i];
    aux[i] = keep + h;
    const double up = probe_loss(net, in, aux, coeffs);
    aux[i] = keep - h;
    const double down = probe_loss(net, in, aux, coeffs);
    aux[i] = keep;
    compare(grads.aux[i], (up - down) / (2.0 * h));
  }
  return worst;
}

}  // namespace

TEST(MlpSpec, Validation) {
  MlpSpec s;
  s.widths = {4};
  EXPECT_THROW(Mlp{s}, std::invalid_argument);
  s.widths = {4, 0, 2};
  EXPECT_THROW(Mlp{s}, std::invalid_argument);
  s.widths = {4, 3, 2};
  s.aux_width = 2;  // aux width without a layer
  EXPECT_THROW(Mlp{s}, std::invalid_argument);
  s.aux_layer = 5;
  EXPECT_THROW(Mlp{s}, std::invalid_argument);
  s.aux_layer = 1;
  EXPECT_NO_THROW(Mlp{s});
}

TEST(Mlp, ZeroNetSigmoidOutputsHalf) {
  MlpSpec s;
  s.widths = {3, 4, 2};
  s.output = Activation::sigmoid;
  Mlp net(s);
  const std::vector<double> in{0.3, -0.7, 2.0};
  const auto& out = net.forward(in);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
}

// Hand-computed two-layer net: widths 2-2-1, ReLU hidden, identity output.
// W0 = [[1, -1], [2, 0]], b0 = [0.5, -1]; W1 = [[1, 3]], b1 = [0.25].
// Input (1, 2): z0 = (1*1 - 1*2 + 0.5, 2*1 - 1) = (-0.5, 1); relu -> (0, 1).
// Output = 0*1 + 1*3 + 0.25 = 3.25.
TEST(Mlp, HandComputedForward) {
  MlpSpec s;
  s.widths = {2, 2, 1};
  Mlp net(s);
  net.params() = {1.0, -1.0, 2.0, 0.0, 0.5, -1.0, 1.0, 3.0, 0.25};
  const std::vector<double> in{1.0, 2.0};
  EXPECT_DOUBLE_EQ(net.forward(in)[0], 3.25);
}

TEST(Mlp, ActorShapeOutputsStayInUnitInterval) {
  MlpSpec s;
  s.widths = {7, 16, 12, 5};
  s.output = Activation::sigmoid;
  Mlp net(s);
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    net.init_uniform(rng);
    std::vector<double> in(7);
    for (double& x : in) x = rng.uniform(-3.0, 3.0);
    for (double y : net.forward(in)) {
      ASSERT_GT(y, 0.0);
      ASSERT_LT(y, 1.0);
    }
  }
}

TEST(Mlp, WidthMismatchThrows) {
  MlpSpec s;
  s.widths = {3, 2};
  Mlp net(s);
  const std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(net.forward(wrong), std::invalid_argument);
  const std::vector<double> in{1.0, 2.0, 3.0};
  net.forward(in);
  const std::vector<double> bad_grad{1.0, 2.0, 3.0};
  EXPECT_THROW(net.backward(bad_grad), std::invalid_argument);
}

TEST(Mlp, BackwardRequiresForward) {
  MlpSpec s;
  s.widths = {2, 2};
  Mlp net(s);
  const std::vector<double> g{1.0, 1.0};
  EXPECT_THROW(net.backward(g), std::logic_error);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  Rng rng(101);
  {
    MlpSpec s;  // the canonical small shape
    s.widths = {5, 3, 2};
    s.output = Activation::sigmoid;
    Mlp net(s);
    net.init_uniform(rng);
    EXPECT_LT(max_gradient_error(net, rng), 1e-4);
  }
  {
    MlpSpec s;  // critic shape: aux joins the second affine layer
    s.widths = {6, 8, 5, 1};
    s.aux_width = 3;
    s.aux_layer = 1;
    Mlp net(s);
    net.init_uniform(rng);
    EXPECT_LT(max_gradient_error(net, rng), 1e-4);
  }
  {
    MlpSpec s;  // deeper sigmoid head
    s.widths = {4, 10, 8, 6, 3};
    s.output = Activation::sigmoid;
    Mlp net(s);
    net.init_uniform(rng);
    EXPECT_LT(max_gradient_error(net, rng), 1e-4);
  }
}

TEST(Mlp, ZeroLossGradientGivesZeroParameterGradients) {
  MlpSpec s;
  s.widths = {3, 4, 2};
  Mlp net(s);
  Rng rng(5);
  net.init_uniform(rng);
  const std::vector<double> in{0.1, 0.2, 0.3};
  net.forward(in);
  const std::vector<double> zero{0.0, 0.0};
  const auto g = net.backward(zero);
  for (double v : g.params) EXPECT_EQ(v, 0.0);
  for (double v : g.input) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, GradientIsLinearInLossGradient) {
  MlpSpec s;
  s.widths = {3, 4, 2};
  Mlp net(s);
  Rng rng(6);
  net.init_uniform(rng);
  const std::vector<double> in{0.1, -0.4, 0.9};
  net.forward(in);
  const std::vector<double> one{0.7, -0.3};
  const std::vector<double> two{1.4, -0.6};
  const auto g1 = net.backward(one);
  const auto g2 = net.backward(two);
  for (std::size_t i = 0; i < g1.params.size(); ++i)
    EXPECT_NEAR(g2.params[i], 2.0 * g1.params[i], 1e-12);
}

TEST(Mlp, InitRespectsFanInBound) {
  MlpSpec s;
  s.widths = {100, 50, 4};
  Mlp net(s);
  Rng rng(7);
  net.init_uniform(rng, 3e-3);
  const double bound0 = 1.0 / std::sqrt(100.0);
  // First layer: 50*100 weights + 50 biases.
  for (std::size_t i = 0; i < 50 * 100 + 50; ++i)
    ASSERT_LE(std::fabs(net.params()[i]), bound0);
  for (std::size_t i = 50 * 100 + 50; i < net.param_count(); ++i)
    ASSERT_LE(std::fabs(net.params()[i]), 3e-3);
}

TEST(Mlp, SaveLoadRoundTripIsExact) {
  MlpSpec s;
  s.widths = {4, 6, 3};
  s.output = Activation::sigmoid;
  s.aux_width = 0;
  Mlp net(s);
  Rng rng(8);
  net.init_uniform(rng);
  std::stringstream io;
  net.save(io);
  Mlp copy = Mlp::load(io);
  ASSERT_EQ(copy.param_count(), net.param_count());
  for (std::size_t i = 0; i < net.param_count(); ++i)
    EXPECT_EQ(copy.params()[i], net.params()[i]);
  std::vector<double> in{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(net.forward(in)[1], copy.forward(in)[1]);
}

TEST(Mlp, LoadRejectsGarbage) {
  std::stringstream io("not a checkpoint");
  EXPECT_THROW(Mlp::load(io), std::runtime_error);
}

TEST(ClipGlobalNorm, ScalesOnlyWhenAboveLimit) {
  std::vector<double> g{3.0, 4.0};  // norm 5
  clip_global_norm(g, 10.0);
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  clip_global_norm(g, 1.0);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 1.0, 1e-12);
  EXPECT_NEAR(g[0] / g[1], 0.75, 1e-12);
}

TEST(Optimizer, SgdStepIsExact) {
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.5, 0.25};
  Optimizer opt(Optimizer::Kind::sgd, 0.1);
  opt.apply(p, g);
  EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.05);
  EXPECT_DOUBLE_EQ(p[1], -2.0 - 0.025);
}

TEST(Optimizer, AdamFirstStepIsSignedUnitStep) {
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{10.0, -0.001};
  Optimizer opt(Optimizer::Kind::adam, 0.01);
  opt.apply(p, g);
  // After bias correction the first step is -lr * g / (|g| + eps).
  EXPECT_NEAR(p[0], -0.01, 1e-6);
  EXPECT_NEAR(p[1], 0.01, 1e-4);
}
