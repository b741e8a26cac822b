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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sapsky/rng.hpp"

namespace sapsky {

enum class Activation { relu, sigmoid, identity };

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::identity: return z;
  }
  return z;
}

/// Derivative expressed through the activation output y = f(z).
inline double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

/// Network shape. `widths` runs input, hidden..., output. An auxiliary input
/// of `aux_width` values can be concatenated onto the input of one affine
/// layer (`aux_layer`, 0-based); this is how a critic takes the action after
/// its first hidden layer.
struct MlpSpec {
  std::vector<int> widths;
  Activation hidden = Activation::relu;
  Activation output = Activation::identity;
  int aux_width = 0;
  int aux_layer = -1;

  void validate() const {
    if (widths.size() < 2)
      throw std::invalid_argument("mlp spec: need at least input and output widths");
    for (int w : widths)
      if (w < 1) throw std::invalid_argument("mlp spec: widths must be positive");
    if (aux_width < 0) throw std::invalid_argument("mlp spec: negative aux width");
    if ((aux_width > 0) != (aux_layer >= 0))
      throw std::invalid_argument("mlp spec: aux width and aux layer go together");
    if (aux_layer >= static_cast<int>(widths.size()) - 1)
      throw std::invalid_argument("mlp spec: aux layer out of range");
  }
};

/// Fully connected network with manual forward/backward passes. Parameters
/// live in one flat vector (per layer: row-major weights, then biases) so
/// optimizers and checkpoints can treat the network as a single array.
/// forward() caches layer inputs and outputs; backward() consumes the cache.
class Mlp {
 public:
  struct Gradients {
    std::vector<double> params;
    std::vector<double> input;
    std::vector<double> aux;
  };

  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const int layers = layer_count();
    offsets_.resize(layers + 1, 0);
    for (int l = 0; l < layers; ++l)
      offsets_[l + 1] = offsets_[l] +
                        static_cast<std::size_t>(out_width(l)) * in_width(l) + out_width(l);
    params_.assign(offsets_.back(), 0.0);
    inputs_.resize(layers);
    outputs_.resize(layers);
  }

  int layer_count() const { return static_cast<int>(spec_.widths.size()) - 1; }
  int input_width() const { return spec_.widths.front(); }
  int output_width() const { return spec_.widths.back(); }
  int aux_width() const { return spec_.aux_width; }
  const MlpSpec& spec() const { return spec_; }

  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// Uniform init on +-1/sqrt(fan_in) per layer; the final layer can use a
  /// tighter bound so initial outputs sit near the activation midpoint.
  void init_uniform(Rng& rng, double final_layer_bound = -1.0) {
    for (int l = 0; l < layer_count(); ++l) {
      double bound = 1.0 / std::sqrt(static_cast<double>(in_width(l)));
      if (final_layer_bound > 0.0 && l == layer_count() - 1) bound = final_layer_bound;
      double* p = params_.data() + offsets_[l];
      const std::size_t n = offsets_[l + 1] - offsets_[l];
      for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
    }
  }

  const std::vector<double>& forward(std::span<const double> input,
                                     std::span<const double> aux = {}) {
    if (static_cast<int>(input.size()) != input_width())
      throw std::invalid_argument("mlp forward: input width mismatch");
    if (static_cast<int>(aux.size()) != spec_.aux_width)
      throw std::invalid_argument("mlp forward: aux width mismatch");
    std::vector<double> current(input.begin(), input.end());
    for (int l = 0; l < layer_count(); ++l) {
      if (l == spec_.aux_layer) current.insert(current.end(), aux.begin(), aux.end());
      inputs_[l] = current;
      const int out_n = out_width(l);
      const int in_n = in_width(l);
      const double* w = params_.data() + offsets_[l];
      const double* b = w + static_cast<std::size_t>(out_n) * in_n;
      const Activation act = activation(l);
      std::vector<double> next(out_n);
      for (int o = 0; o < out_n; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * in_n;
        double z = b[o];
        for (int i = 0; i < in_n; ++i) z += row[i] * current[i];
        next[o] = activate(act, z);
      }
      outputs_[l] = next;
      current = std::move(next);
    }
    return outputs_.back();
  }

  Gradients backward(std::span<const double> dloss_dout) const {
    Gradients g;
    g.params.assign(params_.size(), 0.0);
    g.input.assign(input_width(), 0.0);
    g.aux.assign(spec_.aux_width, 0.0);
    backward_into(dloss_dout, 1.0, g);
    return g;
  }

  /// Accumulates scale * parameter gradients into g.params; g.input and
  /// g.aux are overwritten with this sample's input gradients. Requires a
  /// preceding forward() on the sample.
  void backward_into(std::span<const double> dloss_dout, double scale,
                     Gradients& g) const {
    if (outputs_.empty() || outputs_.back().empty())
      throw std::logic_error("mlp backward: no cached forward pass");
    if (static_cast<int>(dloss_dout.size()) != output_width())
      throw std::invalid_argument("mlp backward: output width mismatch");
    if (g.params.size() != params_.size()) g.params.assign(params_.size(), 0.0);
    g.input.assign(input_width(), 0.0);
    g.aux.assign(spec_.aux_width, 0.0);

    std::vector<double> delta(dloss_dout.begin(), dloss_dout.end());
    for (int l = layer_count() - 1; l >= 0; --l) {
      const int out_n = out_width(l);
      const int in_n = in_width(l);
      const Activation act = activation(l);
      const std::vector<double>& y = outputs_[l];
      const std::vector<double>& x = inputs_[l];
      for (int o = 0; o < out_n; ++o) delta[o] *= activate_grad(act, y[o]);

      const double* w = params_.data() + offsets_[l];
      double* gw = g.params.data() + offsets_[l];
      double* gb = gw + static_cast<std::size_t>(out_n) * in_n;
      std::vector<double> dx(in_n, 0.0);
      for (int o = 0; o < out_n; ++o) {
        const double dz = delta[o];
        const double* row = w + static_cast<std::size_t>(o) * in_n;
        double* grow = gw + static_cast<std::size_t>(o) * in_n;
        for (int i = 0; i < in_n; ++i) {
          grow[i] += scale * dz * x[i];
          dx[i] += row[i] * dz;
        }
        gb[o] += scale * dz;
      }
      if (l == spec_.aux_layer) {
        const int main_n = spec_.widths[l];
        for (int i = 0; i < spec_.aux_width; ++i) g.aux[i] = dx[main_n + i];
        dx.resize(main_n);
      }
      delta = std::move(dx);
    }
    g.input = std::move(delta);
  }

  void save(std::ostream& out) const {
    out << "mlp 1\nwidths";
    for (int w : spec_.widths) out << ' ' << w;
    out << "\nact " << static_cast<int>(spec_.hidden) << ' '
        << static_cast<int>(spec_.output) << "\naux " << spec_.aux_width << ' '
        << spec_.aux_layer << "\nparams " << params_.size() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", params_[i]);
      out << buf << (i + 1 == params_.size() ? '\n' : ' ');
    }
  }

  static Mlp load(std::istream& in) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (!in || tag != "mlp" || version != 1)
      throw std::runtime_error("mlp load: unrecognized header");
    MlpSpec spec;
    in >> tag;
    if (tag != "widths") throw std::runtime_error("mlp load: expected widths");
    // Widths run until the next keyword; sizes are small so parse greedily.
    while (true) {
      int w;
      if (in >> w)
        spec.widths.push_back(w);
      else {
        in.clear();
        break;
      }
    }
    int hidden, output;
    in >> tag >> hidden >> output;
    if (tag != "act") throw std::runtime_error("mlp load: expected act");
    spec.hidden = static_cast<Activation>(hidden);
    spec.output = static_cast<Activation>(output);
    in >> tag >> spec.aux_width >> spec.aux_layer;
    if (tag != "aux") throw std::runtime_error("mlp load: expected aux");
    std::size_t count = 0;
    in >> tag >> count;
    if (tag != "params") throw std::runtime_error("mlp load: expected params");
    Mlp net(spec);
    if (net.param_count() != count)
      throw std::runtime_error("mlp load: param count mismatch");
    for (std::size_t i = 0; i < count; ++i)
      if (!(in >> net.params_[i]))
        throw std::runtime_error("mlp load: truncated parameter block");
    return net;
  }

 private:
  int in_width(int layer) const {
    return spec_.widths[layer] + (layer == spec_.aux_layer ? spec_.aux_width : 0);
  }
  int out_width(int layer) const { return spec_.widths[layer + 1]; }
  Activation activation(int layer) const {
    return layer == layer_count() - 1 ? spec_.output : spec_.hidden;
  }

  MlpSpec spec_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
  std::vector<std::vector<double>> inputs_;   // per-layer input incl. aux
  std::vector<std::vector<double>> outputs_;  // per-layer activations
};

/// Scales `grad` down so its Euclidean norm does not exceed max_norm.
inline void clip_global_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
}

/// Plain SGD or adaptive-moment updates over a flat parameter vector.
class Optimizer {
 public:
  enum class Kind { sgd, adam };

  Optimizer(Kind kind, double learning_rate)
      : kind_(kind), lr_(learning_rate) {}

  void apply(std::vector<double>& params, std::span<const double> grad) {
    if (params.size() != grad.size())
      throw std::invalid_argument("optimizer: gradient size mismatch");
    if (kind_ == Kind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
      return;
    }
    if (m_.size() != params.size()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    ++step_;
    const double b1t = 1.0 - std::pow(kBeta1, step_);
    const double b2t = 1.0 - std::pow(kBeta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / b1t) / (std::sqrt(v_[i] / b2t) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Kind kind_;
  double lr_;
  std::vector<double> m_, v_;
  std::int64_t step_ = 0;
};

}  // namespace sapsky
