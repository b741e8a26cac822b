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
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sapsky/environment.hpp"
#include "sapsky/mlp.hpp"
#include "sapsky/ou_noise.hpp"
#include "sapsky/replay_buffer.hpp"
#include "sapsky/rng.hpp"

namespace sapsky {

/// Hyperparameters of the threshold-tuning agent. Defaults follow the
/// deployed configuration: three hidden layers, slow actor, prioritized
/// replay, soft target tracking and mean-reverting exploration noise.
struct AgentConfig {
  std::vector<int> hidden{400, 300, 200};
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t replay_capacity = 1000000;
  int batch_size = 128;
  int warmup_transitions = 256;  // stored before updates begin
  double grad_clip = 1.0;
  bool use_adam = false;

  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_sigma_decay = 0.995;
  double ou_sigma_floor = 0.01;

  double per_exponent = 0.6;
  double per_beta0 = 0.4;
  double per_min_priority = 1e-3;
  std::int64_t per_beta_horizon = 100000;

  // Optional uniform-random action exploration layered over the OU noise.
  bool epsilon_greedy = false;
  double epsilon0 = 0.8;
  double epsilon_decay = 0.99;
  double epsilon_floor = 0.01;

  double alpha_min = 0.001;
  double alpha_max = 0.9;
  std::uint64_t seed = 1;

  void validate() const {
    if (hidden.empty()) throw std::invalid_argument("agent config: need hidden layers");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("agent config: hidden widths must be positive");
    if (lr_actor <= 0.0 || lr_critic <= 0.0)
      throw std::invalid_argument("agent config: learning rates must be positive");
    if (gamma < 0.0 || gamma >= 1.0)
      throw std::invalid_argument("agent config: gamma must be in [0, 1)");
    if (tau <= 0.0 || tau > 1.0)
      throw std::invalid_argument("agent config: tau must be in (0, 1]");
    if (batch_size < 1) throw std::invalid_argument("agent config: batch size must be positive");
    if (warmup_transitions < batch_size)
      throw std::invalid_argument("agent config: warmup must cover one batch");
    if (!(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max <= 1.0))
      throw std::invalid_argument("agent config: need 0 <= alpha_min < alpha_max <= 1");
    if (per_beta0 < 0.0 || per_beta0 > 1.0)
      throw std::invalid_argument("agent config: per_beta0 must be in [0, 1]");
  }
};

/// Per-episode training record, one row of the training log.
struct EpisodeLog {
  int episode = 0;
  double undiscounted_return = 0.0;
  double mean_critic_loss = 0.0;
  double mean_alpha = 0.0;
  double sigma_ou = 0.0;
};

/// Deterministic-policy actor-critic with a replay buffer. The actor maps
/// the system state to one threshold per node through a sigmoid rescaled to
/// [alpha_min, alpha_max]; the critic scores (state, action) pairs, taking
/// the action at its second hidden layer. Four networks total: each of the
/// two online networks tracks into a slowly updated target copy.
class DdpgAgent {
 public:
  DdpgAgent(int state_width, int action_width, AgentConfig cfg)
      : cfg_(std::move(cfg)),
        state_width_(state_width),
        action_width_(action_width),
        actor_(actor_spec(state_width, action_width, cfg_)),
        actor_target_(actor_spec(state_width, action_width, cfg_)),
        critic_(critic_spec(state_width, action_width, cfg_)),
        critic_target_(critic_spec(state_width, action_width, cfg_)),
        replay_(cfg_.replay_capacity, cfg_.per_exponent, cfg_.per_min_priority),
        noise_(action_width, cfg_.ou_theta, cfg_.ou_sigma),
        actor_opt_(cfg_.use_adam ? Optimizer::Kind::adam : Optimizer::Kind::sgd, cfg_.lr_actor),
        critic_opt_(cfg_.use_adam ? Optimizer::Kind::adam : Optimizer::Kind::sgd, cfg_.lr_critic),
        rng_(derive_seed(cfg_.seed, 0xA6E7)),
        epsilon_(cfg_.epsilon0) {
    cfg_.validate();
    if (state_width < 1 || action_width < 1)
      throw std::invalid_argument("agent: state and action widths must be positive");
    Rng init(derive_seed(cfg_.seed, 0x1417));
    actor_.init_uniform(init, kFinalLayerBound);
    critic_.init_uniform(init, kFinalLayerBound);
    actor_target_.params() = actor_.params();
    critic_target_.params() = critic_.params();
  }

  const AgentConfig& config() const { return cfg_; }
  int state_width() const { return state_width_; }
  int action_width() const { return action_width_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  const Mlp& actor_target() const { return actor_target_; }
  const Mlp& critic_target() const { return critic_target_; }
  std::size_t replay_size() const { return replay_.size(); }
  double exploration_sigma() const { return noise_.sigma(); }

  /// Deterministic policy action.
  std::vector<double> act(std::span<const double> state) {
    return rescale(actor_.forward(state));
  }

  /// Exploration action: policy output plus the OU path, clipped into the
  /// threshold box; optionally replaced by a uniform draw when the
  /// epsilon-greedy layer is enabled.
  std::vector<double> act_explore(std::span<const double> state) {
    if (cfg_.epsilon_greedy && rng_.uniform() < epsilon_) {
      std::vector<double> a(action_width_);
      for (double& x : a) x = rng_.uniform(cfg_.alpha_min, cfg_.alpha_max);
      return a;
    }
    std::vector<double> a = act(state);
    const std::vector<double>& n = noise_.step(rng_);
    for (int i = 0; i < action_width_; ++i)
      a[i] = std::clamp(a[i] + n[i], cfg_.alpha_min, cfg_.alpha_max);
    return a;
  }

  void observe(Transition t) { replay_.store(std::move(t)); }

  bool ready_to_update() const {
    return replay_.size() >= static_cast<std::size_t>(
                                 std::max(cfg_.batch_size, cfg_.warmup_transitions));
  }

  struct UpdateStats {
    double critic_loss = 0.0;
    double mean_q = 0.0;
  };

  /// Draws a prioritized minibatch with the current importance correction.
  PrioritizedReplay::Sample sample_batch() {
    return replay_.sample(cfg_.batch_size, current_beta(), rng_);
  }

  /// Critic regression onto the bootstrapped target: one importance-weighted
  /// mean-squared-error gradient step. Returns the pre-step loss and feeds
  /// the fresh TD errors back into the buffer's priorities.
  double critic_update(const PrioritizedReplay::Sample& batch) {
    const int m = static_cast<int>(batch.items.size());
    std::vector<double> targets(m);
    for (int j = 0; j < m; ++j) {
      const Transition& t = *batch.items[j];
      const std::vector<double> next_action = rescale(actor_target_.forward(t.next_state));
      const double next_q = critic_target_.forward(t.next_state, next_action)[0];
      targets[j] = t.reward + cfg_.gamma * next_q;
    }
    Mlp::Gradients grad;
    grad.params.assign(critic_.param_count(), 0.0);
    std::vector<double> td(m);
    double loss = 0.0;
    for (int j = 0; j < m; ++j) {
      const Transition& t = *batch.items[j];
      const double q = critic_.forward(t.state, t.action)[0];
      td[j] = targets[j] - q;
      loss += batch.weights[j] * td[j] * td[j];
      const double dloss_dq[1] = {-2.0 * batch.weights[j] * td[j] / m};
      critic_.backward_into(dloss_dq, 1.0, grad);
    }
    loss /= m;
    clip_global_norm(grad.params, cfg_.grad_clip);
    critic_opt_.apply(critic_.params(), grad.params);
    replay_.update_priorities(batch.indices, td);
    return loss;
  }

  /// Actor ascent on mean Q(s, policy(s)) through the critic's action
  /// gradient. The sigmoid rescale contributes a constant factor equal to
  /// the threshold span. Returns the pre-step mean Q.
  double actor_update(const PrioritizedReplay::Sample& batch) {
    const int m = static_cast<int>(batch.items.size());
    const double span = cfg_.alpha_max - cfg_.alpha_min;
    Mlp::Gradients actor_grad;
    actor_grad.params.assign(actor_.param_count(), 0.0);
    Mlp::Gradients critic_scratch;
    critic_scratch.params.assign(critic_.param_count(), 0.0);
    std::vector<double> dq_dout(action_width_);
    double mean_q = 0.0;
    for (int j = 0; j < m; ++j) {
      const Transition& t = *batch.items[j];
      const std::vector<double> a = rescale(actor_.forward(t.state));
      mean_q += critic_.forward(t.state, a)[0];
      const double dj_dq[1] = {-1.0 / m};  // descend on -Q
      critic_.backward_into(dj_dq, 0.0, critic_scratch);
      for (int i = 0; i < action_width_; ++i)
        dq_dout[i] = critic_scratch.aux[i] * span;
      actor_.backward_into(dq_dout, 1.0, actor_grad);
    }
    clip_global_norm(actor_grad.params, cfg_.grad_clip);
    actor_opt_.apply(actor_.params(), actor_grad.params);
    return mean_q / m;
  }

  /// target <- tau * online + (1 - tau) * target, both networks.
  void soft_update_targets() {
    soft_update(actor_target_.params(), actor_.params());
    soft_update(critic_target_.params(), critic_.params());
  }

  /// One full learning step: sample, critic regression, actor ascent, then
  /// soft target tracking.
  UpdateStats update() {
    if (!ready_to_update()) throw std::logic_error("agent update: replay not warm yet");
    const auto batch = sample_batch();
    UpdateStats stats;
    stats.critic_loss = critic_update(batch);
    stats.mean_q = actor_update(batch);
    soft_update_targets();
    ++updates_;
    return stats;
  }

  /// Runs the full training loop: episodes of interaction with exploration
  /// noise, one gradient step per environment step once the buffer is warm,
  /// exploration decay at episode boundaries.
  std::vector<EpisodeLog> train(Environment& env, int episodes,
                                const std::function<void(const EpisodeLog&)>& on_episode = {}) {
    if (env.state_width() != state_width_ || env.action_width() != action_width_)
      throw std::invalid_argument("agent train: environment shape mismatch");
    std::vector<EpisodeLog> log;
    log.reserve(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
      std::vector<double> state = env.reset(derive_seed(cfg_.seed, 0xE9, ep));
      noise_.reset();
      double ep_return = 0.0, loss_sum = 0.0, alpha_sum = 0.0;
      int steps = 0, update_count = 0;
      while (true) {
        const std::vector<double> action = act_explore(state);
        StepOutcome out = env.step(action);
        observe(Transition{state, action, out.reward, out.state});
        if (ready_to_update()) {
          loss_sum += update().critic_loss;
          ++update_count;
        }
        ep_return += out.reward;
        alpha_sum += std::accumulate(action.begin(), action.end(), 0.0) /
                     static_cast<double>(action_width_);
        ++steps;
        state = std::move(out.state);
        if (out.done) break;
      }
      EpisodeLog row;
      row.episode = ep;
      row.undiscounted_return = ep_return;
      row.mean_critic_loss = update_count ? loss_sum / update_count : 0.0;
      row.mean_alpha = steps ? alpha_sum / steps : 0.0;
      row.sigma_ou = noise_.sigma();
      log.push_back(row);
      if (on_episode) on_episode(row);
      noise_.decay_sigma(cfg_.ou_sigma_decay, cfg_.ou_sigma_floor);
      epsilon_ = std::max(cfg_.epsilon_floor, epsilon_ * cfg_.epsilon_decay);
    }
    return log;
  }

  void save(std::ostream& out) const {
    char bounds[64];
    std::snprintf(bounds, sizeof bounds, "%.17g %.17g", cfg_.alpha_min, cfg_.alpha_max);
    out << "sapsky-agent 1\n";
    out << "shape " << state_width_ << ' ' << action_width_ << '\n';
    out << "alpha " << bounds << '\n';
    out << "actor\n";
    actor_.save(out);
    out << "critic\n";
    critic_.save(out);
  }

  /// Restores the online networks from a checkpoint; targets start as exact
  /// copies. Optimizer state and the replay buffer are not persisted.
  static DdpgAgent load(std::istream& in, AgentConfig cfg) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (!in || tag != "sapsky-agent" || version != 1)
      throw std::runtime_error("agent load: unrecognized header");
    int state_w = 0, action_w = 0;
    in >> tag >> state_w >> action_w;
    if (tag != "shape") throw std::runtime_error("agent load: expected shape");
    in >> tag >> cfg.alpha_min >> cfg.alpha_max;
    if (tag != "alpha") throw std::runtime_error("agent load: expected alpha bounds");
    in >> tag;
    if (tag != "actor") throw std::runtime_error("agent load: expected actor");
    Mlp actor = Mlp::load(in);
    in >> tag;
    if (tag != "critic") throw std::runtime_error("agent load: expected critic");
    Mlp critic = Mlp::load(in);
    DdpgAgent agent(state_w, action_w, std::move(cfg));
    if (actor.param_count() != agent.actor_.param_count() ||
        critic.param_count() != agent.critic_.param_count())
      throw std::runtime_error("agent load: checkpoint shape mismatch");
    agent.actor_.params() = actor.params();
    agent.critic_.params() = critic.params();
    agent.actor_target_.params() = actor.params();
    agent.critic_target_.params() = critic.params();
    return agent;
  }

  /// Reads only the actor network from a checkpoint, for policy evaluation.
  static Mlp load_actor(std::istream& in, double* alpha_min = nullptr,
                        double* alpha_max = nullptr) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (!in || tag != "sapsky-agent" || version != 1)
      throw std::runtime_error("checkpoint: unrecognized header");
    int state_w = 0, action_w = 0;
    in >> tag >> state_w >> action_w;
    if (tag != "shape") throw std::runtime_error("checkpoint: expected shape");
    double lo = 0.0, hi = 0.0;
    in >> tag >> lo >> hi;
    if (tag != "alpha") throw std::runtime_error("checkpoint: expected alpha bounds");
    if (alpha_min) *alpha_min = lo;
    if (alpha_max) *alpha_max = hi;
    in >> tag;
    if (tag != "actor") throw std::runtime_error("checkpoint: expected actor");
    return Mlp::load(in);
  }

 private:
  static constexpr double kFinalLayerBound = 3e-3;

  static MlpSpec actor_spec(int state_w, int action_w, const AgentConfig& cfg) {
    MlpSpec s;
    s.widths.push_back(state_w);
    for (int h : cfg.hidden) s.widths.push_back(h);
    s.widths.push_back(action_w);
    s.hidden = Activation::relu;
    s.output = Activation::sigmoid;
    return s;
  }

  /// The critic consumes the action after the first hidden layer.
  static MlpSpec critic_spec(int state_w, int action_w, const AgentConfig& cfg) {
    MlpSpec s = actor_spec(state_w, 1, cfg);
    s.output = Activation::identity;
    s.aux_width = action_w;
    s.aux_layer = 1;
    return s;
  }

  std::vector<double> rescale(const std::vector<double>& sigmoid_out) const {
    std::vector<double> a(sigmoid_out.size());
    const double span = cfg_.alpha_max - cfg_.alpha_min;
    for (std::size_t i = 0; i < a.size(); ++i)
      a[i] = cfg_.alpha_min + span * sigmoid_out[i];
    return a;
  }

  void soft_update(std::vector<double>& target, const std::vector<double>& online) const {
    for (std::size_t i = 0; i < target.size(); ++i)
      target[i] = cfg_.tau * online[i] + (1.0 - cfg_.tau) * target[i];
  }

  double current_beta() const {
    return annealed_beta(cfg_.per_beta0, updates_, cfg_.per_beta_horizon);
  }

  AgentConfig cfg_;
  int state_width_;
  int action_width_;
  Mlp actor_, actor_target_, critic_, critic_target_;
  PrioritizedReplay replay_;
  OuNoise noise_;
  Optimizer actor_opt_, critic_opt_;
  Rng rng_;
  double epsilon_;
  std::int64_t updates_ = 0;
};

}  // namespace sapsky
