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

#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hybridrl/agent.hpp"
#include "hybridrl/networks.hpp"
#include "hybridrl/pdqn.hpp"
#include "hybridrl/replay.hpp"

namespace hybridrl {

// Continuous relaxation of a hybrid space: the action is (f_1..f_K, x_all)
// with f in [-1, 1]^K, and the executed head is argmax f.
struct RelaxedSpace {
  int num_heads = 0;
  int param_dim = 0;
  ParamLayout layout;  // block 0 holds f, blocks 1..K are the original blocks

  int dim() const { return num_heads + param_dim; }

  // Hybrid action executed for a relaxed vector; bounded blocks are clamped.
  HybridAction execute(const Vector& relaxed, const ActionMask& mask) const {
    if (relaxed.size() != dim()) throw ShapeError("relaxed action has wrong dimension");
    const int k = masked_argmax(relaxed.head(num_heads), mask);
    const Vector clamped = clamp_to_bounds(layout, relaxed);
    return {k, clamped.tail(param_dim)};
  }
};

inline RelaxedSpace ddpg_relax_space(const ActionSpaceSpec& space) {
  RelaxedSpace r;
  r.num_heads = space.num_heads();
  r.param_dim = space.param_dim();
  std::vector<ParamBlock> blocks;
  blocks.push_back(ParamLayout::box(0, Vector::Constant(r.num_heads, -1.0), Vector::Constant(r.num_heads, 1.0)));
  for (auto b : space.layout.blocks) {
    b.head += 1;
    blocks.push_back(std::move(b));
  }
  r.layout = ParamLayout(std::move(blocks));
  return r;
}

// DDPG on the relaxed space: a deterministic actor mu(s) over (f, x_all) and
// a single-output critic Q(s, f, x_all; w). No target networks, matching the
// P-DQN agent.
class DDPGAgent final : public Agent {
 public:
  DDPGAgent(const ActionSpaceSpec& space, int state_dim, PDQNConfig cfg)
      : space_(space),
        cfg_(std::move(cfg)),
        relaxed_(ddpg_relax_space(space)),
        critic_(QNetwork::make(state_dim, 1, relaxed_.dim(), cfg_.q_hidden, false, cfg_.seed * 2 + 1)),
        actor_(ParamActor::make(state_dim, relaxed_.layout, cfg_.actor_hidden, cfg_.seed * 2 + 2)),
        replay_(cfg_.replay_capacity),
        rng_(cfg_.seed) {
    cfg_.validate();
    if (cfg_.optimizer == Optimizer::kRmsprop) {
      critic_opt_ = RMSPropState::for_params(critic_.params, cfg_.rmsprop);
      actor_opt_ = RMSPropState::for_params(actor_.params, cfg_.rmsprop);
    }
  }

  std::string name() const override { return "ddpg-relaxed"; }

  Vector policy(const Vector& state) const {
    return clamp_to_bounds(relaxed_.layout, actor_forward(actor_, state).x_all);
  }

  // Exploration uses the same uniform draw as P-DQN: f uniform in [-1, 1]^K
  // and every parameter block uniform.
  AgentAction act(const Vector& state, const ActionMask& mask, bool explore) override {
    if (usable_count(mask) == 0) throw InvalidActionError("ddpg: every head is masked");
    bool explored = false;
    if (explore) {
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      explored = coin(rng_) < epsilon();
    }
    Vector relaxed = explored ? sample_uniform_params(relaxed_.layout, rng_) : policy(state);
    HybridAction env = relaxed_.execute(relaxed, mask);
    return {std::move(env), {env.k, std::move(relaxed)}, explored};
  }

  TrainStats observe(const Vector& state, const AgentAction& action, double reward, const Vector& next_state,
                     bool terminal, const ActionMask& next_mask) override {
    replay_.push({state, {0, action.internal.x_all}, reward, next_state, terminal, next_mask, {}});
    ++t_;
    return train_step();
  }

  // Critic regression on one-step targets r + gamma Q(s', mu(s')), then an
  // actor step along grad_theta Q(s, mu(s)).
  TrainStats train_step() {
    if (replay_.size() < cfg_.effective_warmup()) return {};
    const auto idx = replay_.sample_indices(cfg_.batch_size, rng_);
    std::vector<QSample> samples;
    std::vector<Vector> states;
    critic_batch(idx, samples, states);
    const auto cl = q_loss_grad(critic_, samples);
    apply_update(critic_.params, cl.grads, lr_omega(), cfg_.optimizer, &critic_opt_);
    const auto al = theta_loss_grad(actor_, critic_, states, ThetaLossOptions{cfg_.penalty_weight, false});
    apply_update(actor_.params, al.grads, lr_theta(), cfg_.optimizer, &actor_opt_);
    return {true, cl.loss, al.loss};
  }

  void critic_batch(const std::vector<std::size_t>& idx, std::vector<QSample>& samples,
                    std::vector<Vector>& states) const {
    samples.clear();
    states.clear();
    std::vector<Eigen::Index> live;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& tr = replay_.slot(idx[i]);
      samples.push_back({tr.state, tr.action, tr.reward});
      states.push_back(tr.state);
      if (!tr.terminal) live.push_back(static_cast<Eigen::Index>(i));
    }
    if (live.empty()) return;
    Matrix next(actor_.state_dim, static_cast<Eigen::Index>(live.size()));
    for (std::size_t j = 0; j < live.size(); ++j)
      next.col(static_cast<Eigen::Index>(j)) = replay_.slot(idx[static_cast<std::size_t>(live[j])]).next_state;
    const auto af = actor_forward_batch(actor_, next);
    const auto qf = q_forward_batch(critic_, next, af.x);
    for (std::size_t j = 0; j < live.size(); ++j)
      samples[static_cast<std::size_t>(live[j])].target += cfg_.gamma * qf.q(0, static_cast<Eigen::Index>(j));
  }

  std::int64_t steps() const override { return t_; }
  void set_steps(std::int64_t t) override { t_ = t; }
  double epsilon() const override { return schedule_value(cfg_.epsilon, t_); }
  double lr_omega() const override { return schedule_value(cfg_.alpha, t_); }
  double lr_theta() const override { return schedule_value(cfg_.beta, t_); }

  std::vector<NamedTensor> export_tensors() const override {
    std::vector<NamedTensor> out;
    export_params("ddpg.critic", critic_.params, out);
    export_params("ddpg.actor", actor_.params, out);
    return out;
  }

  void import_tensors(const std::vector<NamedTensor>& ts) override {
    import_params("ddpg.critic", ts, critic_.params);
    import_params("ddpg.actor", ts, actor_.params);
  }

  const RelaxedSpace& relaxed() const { return relaxed_; }
  QNetwork& critic() { return critic_; }
  const QNetwork& critic() const { return critic_; }
  ParamActor& actor() { return actor_; }
  const ParamActor& actor() const { return actor_; }
  ReplayBuffer& replay() { return replay_; }

 private:
  ActionSpaceSpec space_;
  PDQNConfig cfg_;
  RelaxedSpace relaxed_;
  QNetwork critic_;
  ParamActor actor_;
  RMSPropState critic_opt_;
  RMSPropState actor_opt_;
  ReplayBuffer replay_;
  std::int64_t t_ = 0;
  Rng rng_;
};

}  // namespace hybridrl
