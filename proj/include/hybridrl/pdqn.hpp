// Copyright 2026 The hybridrl Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hybridrl/agent.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/networks.hpp"
#include "hybridrl/optim.hpp"
#include "hybridrl/replay.hpp"
#include "hybridrl/schedule.hpp"

namespace hybridrl {

enum class Optimizer { kSgd, kRmsprop };

// Defaults are the point-mass settings: B = 32, replay 10k, actor 64-32,
// Q 64-32-32 with a dueling head, epsilon 1 -> 0.1 over 30k steps and both
// step sizes 0.001 -> 0 over the run.
struct PDQNConfig {
  double gamma = 0.9;
  Schedule alpha = Schedule::linear(1e-3, 0.0, 150000);  // omega step size
  Schedule beta = Schedule::linear(1e-3, 0.0, 150000);   // theta step size
  Schedule epsilon = Schedule::linear(1.0, 0.1, 30000);
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 10000;
  std::size_t warmup = 0;  // 0 selects max(batch_size, 500)
  double penalty_weight = 1.0;
  bool dueling = true;
  bool target_network = false;
  std::int64_t target_sync_interval = 1000;
  bool simultaneous_update = false;  // theta gradient against the pre-update omega
  bool exclude_masked_heads = false;
  Optimizer optimizer = Optimizer::kRmsprop;
  RMSPropConfig rmsprop;
  ExplorationDist exploration;
  std::vector<int> actor_hidden{64, 32};
  std::vector<int> q_hidden{64, 32, 32};
  std::uint64_t seed = 0;

  std::size_t effective_warmup() const { return warmup > 0 ? warmup : std::max<std::size_t>(batch_size, 500); }

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (replay_capacity < 1) throw ConfigError("replay capacity must be >= 1");
    if (penalty_weight < 0.0) throw ConfigError("penalty weight must be >= 0");
    if (target_network && target_sync_interval < 1) throw ConfigError("target sync interval must be >= 1");
    alpha.validate();
    beta.validate();
    epsilon.validate();
    if (epsilon.start > 1.0 || epsilon.end > 1.0) throw ConfigError("epsilon must lie in [0, 1]");
  }
};

// y = r for terminal transitions, else r + gamma * max over usable k of
// Q(s', k, x(s'); w).
inline double compute_target(const QNetwork& q, const ParamActor& actor, double reward, const Vector& next_state,
                             bool terminal, const ActionMask& mask, double gamma) {
  if (terminal) return reward;
  const Vector x = actor_forward(actor, next_state).x_all;
  return reward + gamma * masked_max(q_forward(q, next_state, x), mask);
}

// Batched form of compute_target over replay samples.
inline std::vector<double> compute_targets(const QNetwork& q, const ParamActor& actor,
                                           const std::vector<const Transition*>& batch, double gamma) {
  std::vector<double> y(batch.size());
  std::vector<Eigen::Index> live;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i]->reward;
    if (!batch[i]->terminal) live.push_back(static_cast<Eigen::Index>(i));
  }
  if (live.empty()) return y;
  Matrix next(actor.state_dim, static_cast<Eigen::Index>(live.size()));
  for (std::size_t j = 0; j < live.size(); ++j) next.col(static_cast<Eigen::Index>(j)) = batch[static_cast<std::size_t>(live[j])]->next_state;
  const auto af = actor_forward_batch(actor, next);
  const auto qf = q_forward_batch(q, next, af.x);
  for (std::size_t j = 0; j < live.size(); ++j) {
    const auto i = static_cast<std::size_t>(live[j]);
    y[i] += gamma * masked_max(qf.q.col(static_cast<Eigen::Index>(j)), batch[i]->next_mask);
  }
  return y;
}

// With probability epsilon a draw from the exploration distribution,
// otherwise greedy_action. One uniform draw decides the branch.
inline AgentAction pdqn_epsilon_greedy(const QNetwork& q, const ParamActor& actor, const Vector& state,
                                       const ActionMask& mask, double epsilon, const ExplorationDist& dist,
                                       Rng& rng) {
  if (usable_count(mask) == 0) throw InvalidActionError("select_action: every head is masked");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    HybridAction a;
    if (dist.kind == ExplorationDist::Kind::kUniformHybrid) {
      a = sample_uniform_action(actor.layout, mask, rng);
    } else {
      a = greedy_action(q, actor, state, mask);
      a.x_all = perturb_params(actor.layout, a.x_all, dist.noise_scale, rng);
    }
    return {a, a, true};
  }
  HybridAction a = greedy_action(q, actor, state, mask);
  return {a, a, false};
}

inline void apply_update(MLPParams& params, const Gradients& grads, double lr, Optimizer opt, RMSPropState* state) {
  if (opt == Optimizer::kSgd)
    sgd_step(params, grads, lr);
  else
    rmsprop_step(params, grads, *state, lr);
}

// P-DQN with experience replay.
class PDQNAgent final : public Agent {
 public:
  PDQNAgent(const ActionSpaceSpec& space, int state_dim, PDQNConfig cfg)
      : space_(space),
        cfg_(std::move(cfg)),
        q_(QNetwork::make(state_dim, space.num_heads(), space.param_dim(), cfg_.q_hidden, cfg_.dueling,
                          cfg_.seed * 2 + 1)),
        actor_(ParamActor::make(state_dim, space.layout, cfg_.actor_hidden, cfg_.seed * 2 + 2)),
        replay_(cfg_.replay_capacity),
        rng_(cfg_.seed) {
    cfg_.validate();
    space_.validate();
    if (cfg_.optimizer == Optimizer::kRmsprop) {
      q_opt_ = RMSPropState::for_params(q_.params, cfg_.rmsprop);
      actor_opt_ = RMSPropState::for_params(actor_.params, cfg_.rmsprop);
    }
    sync_targets();
  }

  std::string name() const override { return "pdqn"; }

  AgentAction act(const Vector& state, const ActionMask& mask, bool explore) override {
    last_mask_ = mask;
    if (!explore) {
      HybridAction a = greedy_action(q_, actor_, state, mask);
      return {a, a, false};
    }
    return pdqn_epsilon_greedy(q_, actor_, state, mask, epsilon(), cfg_.exploration, rng_);
  }

  TrainStats observe(const Vector& state, const AgentAction& action, double reward, const Vector& next_state,
                     bool terminal, const ActionMask& next_mask) override {
    replay_.push({state, action.internal, reward, next_state, terminal, next_mask, last_mask_});
    ++t_;
    return train_step();
  }

  // One minibatch update; a no-op before warm-up.
  TrainStats train_step() {
    if (replay_.size() < cfg_.effective_warmup()) return {};
    const auto idx = replay_.sample_indices(cfg_.batch_size, rng_);
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(&replay_.slot(i));

    const QNetwork& q_boot = cfg_.target_network ? q_target_ : q_;
    const ParamActor& actor_boot = cfg_.target_network ? actor_target_ : actor_;
    const auto targets = compute_targets(q_boot, actor_boot, batch, cfg_.gamma);

    std::vector<QSample> samples;
    std::vector<Vector> states;
    std::vector<ActionMask> masks;
    samples.reserve(batch.size());
    states.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      samples.push_back({batch[i]->state, batch[i]->action, targets[i]});
      states.push_back(batch[i]->state);
    }
    if (cfg_.exclude_masked_heads) {
      masks.reserve(batch.size());
      for (const auto* tr : batch) masks.push_back(tr->mask.empty() ? all_usable(space_.num_heads()) : tr->mask);
    }

    TrainStats stats;
    stats.trained = true;
    const auto ql = q_loss_grad(q_, samples);
    stats.loss_q = ql.loss;

    ThetaLossOptions topts{cfg_.penalty_weight, cfg_.exclude_masked_heads};
    const std::vector<ActionMask>* mptr = cfg_.exclude_masked_heads ? &masks : nullptr;
    if (cfg_.simultaneous_update) {
      const auto tl = theta_loss_grad(actor_, q_, states, topts, mptr);
      apply_update(q_.params, ql.grads, lr_omega(), cfg_.optimizer, &q_opt_);
      apply_update(actor_.params, tl.grads, lr_theta(), cfg_.optimizer, &actor_opt_);
      stats.loss_theta = tl.loss;
    } else {
      apply_update(q_.params, ql.grads, lr_omega(), cfg_.optimizer, &q_opt_);
      const auto tl = theta_loss_grad(actor_, q_, states, topts, mptr);
      apply_update(actor_.params, tl.grads, lr_theta(), cfg_.optimizer, &actor_opt_);
      stats.loss_theta = tl.loss;
    }
    if (cfg_.target_network && t_ % cfg_.target_sync_interval == 0) sync_targets();
    return stats;
  }

  std::int64_t steps() const override { return t_; }
  void set_steps(std::int64_t t) override { t_ = t; }
  double epsilon() const override { return schedule_value(cfg_.epsilon, t_); }
  double lr_omega() const override { return schedule_value(cfg_.alpha, t_); }
  double lr_theta() const override { return schedule_value(cfg_.beta, t_); }

  std::vector<NamedTensor> export_tensors() const override {
    std::vector<NamedTensor> out;
    export_params("pdqn.omega", q_.params, out);
    export_params("pdqn.theta", actor_.params, out);
    out.push_back({"pdqn.dueling", {1}, {q_.dueling ? 1.0 : 0.0}});
    return out;
  }

  void import_tensors(const std::vector<NamedTensor>& ts) override {
    import_params("pdqn.omega", ts, q_.params);
    import_params("pdqn.theta", ts, actor_.params);
    sync_targets();
  }

  const PDQNConfig& config() const { return cfg_; }
  const ActionSpaceSpec& space() const { return space_; }
  QNetwork& q() { return q_; }
  const QNetwork& q() const { return q_; }
  ParamActor& actor() { return actor_; }
  const ParamActor& actor() const { return actor_; }
  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  Rng& rng() { return rng_; }

 private:
  void sync_targets() {
    if (!cfg_.target_network) return;
    q_target_ = q_;
    actor_target_ = actor_;
  }

  ActionSpaceSpec space_;
  PDQNConfig cfg_;
  QNetwork q_;
  ParamActor actor_;
  QNetwork q_target_;
  ParamActor actor_target_;
  RMSPropState q_opt_;
  RMSPropState actor_opt_;
  ReplayBuffer replay_;
  std::int64_t t_ = 0;
  Rng rng_;
  ActionMask last_mask_;
};

// One replay-free update on a single transition with both gradients taken
// at the current (omega, theta), then SGD. This is the sequential
// counterpart of a one-worker, one-step asynchronous run.
inline TrainStats pdqn_online_update(QNetwork& q, ParamActor& actor, const Transition& tr, double gamma,
                                     double lr_omega, double lr_theta, double penalty_weight) {
  const double y = compute_target(q, actor, tr.reward, tr.next_state, tr.terminal, tr.next_mask, gamma);
  const auto ql = q_loss_grad(q, {{tr.state, tr.action, y}});
  const auto tl = theta_loss_grad(actor, q, {tr.state}, ThetaLossOptions{penalty_weight, false});
  sgd_step(q.params, ql.grads, lr_omega);
  sgd_step(actor.params, tl.grads, lr_theta);
  return {true, ql.loss, tl.loss};
}

struct OnlineRunResult {
  QNetwork q;
  ParamActor actor;
  std::vector<MLPParams> omega_trajectory;  // after every update when recorded
  std::vector<MLPParams> theta_trajectory;
};

// Runs `steps` environment steps of replay-free P-DQN. Schedules are indexed
// by the number of steps taken: epsilon before the step, learning rates
// after it.
inline OnlineRunResult run_online_pdqn(Environment& env, QNetwork q, ParamActor actor, const PDQNConfig& cfg,
                                       std::int64_t steps, std::uint64_t env_seed, std::uint64_t act_seed,
                                       bool record_trajectory = false) {
  Rng env_rng(env_seed);
  Rng act_rng(act_seed);
  OnlineRunResult res;
  bool need_reset = true;
  Vector obs;
  ActionMask mask;
  for (std::int64_t t = 0; t < steps; ++t) {
    if (need_reset) {
      auto r = env.reset(env_rng);
      obs = std::move(r.observation);
      mask = std::move(r.mask);
      need_reset = false;
    }
    const double eps = schedule_value(cfg.epsilon, t);
    const auto a = pdqn_epsilon_greedy(q, actor, obs, mask, eps, cfg.exploration, act_rng);
    auto sr = env.step(a.env);
    const Transition tr{obs, a.internal, sr.reward, sr.observation, sr.terminal, sr.mask, mask};
    pdqn_online_update(q, actor, tr, cfg.gamma, schedule_value(cfg.alpha, t + 1), schedule_value(cfg.beta, t + 1),
                       cfg.penalty_weight);
    if (record_trajectory) {
      res.omega_trajectory.push_back(q.params);
      res.theta_trajectory.push_back(actor.params);
    }
    obs = std::move(sr.observation);
    mask = std::move(sr.mask);
    need_reset = sr.terminal;
  }
  res.q = std::move(q);
  res.actor = std::move(actor);
  return res;
}

}  // namespace hybridrl
