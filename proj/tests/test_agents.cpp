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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hybridrl/ddpg.hpp"
#include "hybridrl/dqn.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/pdqn.hpp"

namespace hybridrl {
namespace {

void zero(MLPParams& p) {
  for (std::size_t i = 0; i < p.coordinate_count(); ++i) p.coordinate(i) = 0.0;
}

// Q-network whose outputs are the given constants regardless of input.
QNetwork constant_q(int state_dim, int param_dim, const std::vector<double>& values) {
  auto q = QNetwork::make(state_dim, static_cast<int>(values.size()), param_dim, {}, false, 1);
  zero(q.params);
  for (std::size_t k = 0; k < values.size(); ++k) q.params.layers[0].bias[static_cast<Eigen::Index>(k)] = values[k];
  return q;
}

struct TargetFixture : ::testing::Test {
  ParamLayout layout{{ParamLayout::free(0, 1), ParamLayout::none(1), ParamLayout::none(2)}};
  QNetwork q = constant_q(2, 1, {0.5, 1.5, -1.0});
  ParamActor actor = ParamActor::make(2, layout, {4}, 3);
  Vector s1 = Vector::Ones(2);
};

TEST_F(TargetFixture, TerminalIsReward) {
  EXPECT_EQ(compute_target(q, actor, 0.7, s1, true, all_usable(3), 0.9), 0.7);
}

TEST_F(TargetFixture, BootstrapsMaxOverUsable) {
  EXPECT_NEAR(compute_target(q, actor, 0.2, s1, false, all_usable(3), 0.9), 1.55, 1e-15);
  EXPECT_NEAR(compute_target(q, actor, 0.2, s1, false, {true, false, true}, 0.9), 0.65, 1e-15);
  // one usable head: exactly the single-head bootstrap
  EXPECT_EQ(compute_target(q, actor, 0.2, s1, false, {false, false, true}, 0.9), 0.2 + 0.9 * -1.0);
}

TEST_F(TargetFixture, BatchedMatchesScalar) {
  std::vector<Transition> trs;
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.state = s1;
    t.action = {0, Vector::Zero(1)};
    t.reward = 0.1 * i;
    t.next_state = Vector::Constant(2, i);
    t.terminal = i % 3 == 0;
    t.next_mask = {i % 2 == 0, true, i % 4 == 0};
    trs.push_back(t);
  }
  std::vector<const Transition*> ptrs;
  for (const auto& t : trs) ptrs.push_back(&t);
  const auto y = compute_targets(q, actor, ptrs, 0.9);
  for (std::size_t i = 0; i < trs.size(); ++i)
    EXPECT_EQ(y[i], compute_target(q, actor, trs[i].reward, trs[i].next_state, trs[i].terminal, trs[i].next_mask, 0.9));
}

TEST(EpsilonGreedy, Extremes) {
  const auto space = goal_action_space();
  const auto q = QNetwork::make(8, 2, 2, {8}, true, 1);
  const auto actor = ParamActor::make(8, space.layout, {8}, 2);
  Rng rng(3);
  const Vector s = Vector::Ones(8);
  const auto greedy = greedy_action(q, actor, s, all_usable(2));
  for (int i = 0; i < 200; ++i) {
    EXPECT_TRUE(pdqn_epsilon_greedy(q, actor, s, all_usable(2), 1.0, {}, rng).explored);
    const auto a = pdqn_epsilon_greedy(q, actor, s, all_usable(2), 0.0, {}, rng);
    EXPECT_FALSE(a.explored);
    EXPECT_EQ(a.env.k, greedy.k);
    EXPECT_EQ(a.env.x_all, greedy.x_all);
  }
}

TEST(EpsilonGreedy, HalfExplorationFraction) {
  const auto space = goal_action_space();
  const auto q = QNetwork::make(8, 2, 2, {8}, true, 1);
  const auto actor = ParamActor::make(8, space.layout, {8}, 2);
  Rng rng(4);
  int explored = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) explored += pdqn_epsilon_greedy(q, actor, Vector::Ones(8), all_usable(2), 0.5, {}, rng).explored;
  EXPECT_NEAR(static_cast<double>(explored) / n, 0.5, 0.01);
}

TEST(EpsilonGreedy, ExplorationRespectsMask) {
  const BanditSpec spec;
  const auto space = spec.action_space();
  const auto q = QNetwork::make(1, 2, 2, {8}, true, 1);
  const auto actor = ParamActor::make(1, space.layout, {8}, 2);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto a = pdqn_epsilon_greedy(q, actor, Vector::Zero(1), {false, true}, 1.0, {}, rng);
    EXPECT_EQ(a.env.k, 1);
    EXPECT_GE(a.env.x_all.minCoeff(), -1.0);
    EXPECT_LE(a.env.x_all.maxCoeff(), 1.0);
  }
}

PDQNConfig frozen_config() {
  PDQNConfig c;
  c.alpha = Schedule::constant(0.0);
  c.beta = Schedule::constant(0.0);
  c.batch_size = 4;
  c.warmup = 4;
  c.q_hidden = {16};
  c.actor_hidden = {16};
  c.optimizer = Optimizer::kRmsprop;
  c.seed = 9;
  return c;
}

// Drives `agent` on `env` for `steps` steps and returns the last TrainStats.
TrainStats drive(Agent& agent, Environment& env, int steps) {
  Rng rng(1);
  auto r = env.reset(rng);
  Vector obs = r.observation;
  ActionMask mask = r.mask;
  TrainStats last;
  for (int t = 0; t < steps; ++t) {
    const auto a = agent.act(obs, mask, true);
    const auto sr = env.step(a.env);
    last = agent.observe(obs, a, sr.reward, sr.observation, sr.terminal, sr.mask);
    obs = sr.observation;
    mask = sr.mask;
    if (sr.terminal) {
      r = env.reset(rng);
      obs = r.observation;
      mask = r.mask;
    }
  }
  return last;
}

void expect_frozen(Agent& agent, Environment& env) {
  const auto before = agent.export_tensors();
  const auto stats = drive(agent, env, 40);
  EXPECT_TRUE(stats.trained);
  EXPECT_TRUE(std::isfinite(stats.loss_q));
  const auto after = agent.export_tensors();
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i].values, after[i].values) << before[i].name;
}

TEST(ZeroLearningRate, PdqnIsNoOp) {
  GoalEnv env;
  PDQNAgent agent(env.space(), env.observation_dim(), frozen_config());
  expect_frozen(agent, env);
}

TEST(ZeroLearningRate, DqnIsNoOp) {
  GoalEnv env;
  DQNAgent agent(env.space(), env.observation_dim(), frozen_config());
  expect_frozen(agent, env);
}

TEST(ZeroLearningRate, DdpgIsNoOp) {
  BanditEnv env;
  DDPGAgent agent(env.space(), env.observation_dim(), frozen_config());
  expect_frozen(agent, env);
}

TEST(PdqnAgent, NoTrainingBeforeWarmup) {
  BanditEnv env;
  auto cfg = frozen_config();
  cfg.warmup = 100;
  PDQNAgent agent(env.space(), env.observation_dim(), cfg);
  EXPECT_FALSE(drive(agent, env, 50).trained);
  EXPECT_EQ(agent.steps(), 50);
}

TEST(PdqnAgent, ExactTargetsLeaveOmegaUnchanged) {
  // gamma = 0 and every stored reward equal to Q(s, k, x): zero Q loss.
  BanditEnv env;
  auto cfg = frozen_config();
  cfg.alpha = Schedule::constant(0.5);
  cfg.optimizer = Optimizer::kSgd;
  cfg.gamma = 0.0;
  PDQNAgent agent(env.space(), env.observation_dim(), cfg);
  const QNetwork q0 = agent.q();
  Rng rng(2);
  for (int i = 0; i < 4; ++i) {
    const auto a = agent.act(Vector::Zero(1), all_usable(2), true);
    const double y = q_forward(q0, Vector::Zero(1), a.internal.x_all)[a.internal.k];
    agent.replay().push({Vector::Zero(1), a.internal, y, Vector::Zero(1), true, all_usable(2), all_usable(2)});
  }
  const auto stats = agent.train_step();
  EXPECT_TRUE(stats.trained);
  EXPECT_EQ(stats.loss_q, 0.0);
  EXPECT_TRUE(agent.q().params == q0.params);
}

TEST(DqnDiscretize, EightDirectionsPlusBrake) {
  const auto table = dqn_discretize(goal_action_space(), 8);
  ASSERT_EQ(table.size(), 9);
  EXPECT_EQ(table.actions[2].k, kGoalPull);
  EXPECT_NEAR(table.actions[2].x_all[0], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(table.actions[2].x_all[1], 1.0);
  int brakes = 0;
  for (const auto& a : table.actions) {
    if (a.k == kGoalBrake) {
      ++brakes;
      continue;
    }
    EXPECT_NEAR(a.x_all.norm(), 1.0, 1e-15);
  }
  EXPECT_EQ(brakes, 1);
  EXPECT_THROW(dqn_discretize(goal_action_space(), 0), ConfigError);
}

TEST(DqnLoss, TerminalUnitReward) {
  auto q = QNetwork::make(2, 3, 0, {}, false, 1);
  zero(q.params);
  const auto lg = q_loss_grad(q, {{Vector::Zero(2), {1, Vector::Zero(0)}, 1.0}});
  EXPECT_DOUBLE_EQ(lg.loss, 0.5);
}

TEST(DqnAgent, GammaZeroTargetsAreRewards) {
  GoalEnv env;
  auto cfg = frozen_config();
  cfg.gamma = 0.0;
  DQNAgent agent(env.space(), env.observation_dim(), cfg);
  drive(agent, env, 20);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < 20; ++i) idx.push_back(i);
  const auto samples = agent.regression_batch(idx);
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(samples[i].target, agent.replay().slot(i).reward);
}

TEST(DdpgRelax, DimensionsAndExecution) {
  const ParamLayout layout({ParamLayout::free(0, 1), ParamLayout::direction(1)});
  const ActionSpaceSpec space{layout, {"a", "b"}};
  const auto r = ddpg_relax_space(space);
  EXPECT_EQ(r.dim(), 5);
  Vector v(5);
  v << 0.1, 0.9, 0.3, 0.6, 0.8;
  const auto a = r.execute(v, all_usable(2));
  EXPECT_EQ(a.k, 1);
  EXPECT_EQ(a.x_all, v.tail(3));
  v.head(2) << 0.4, 0.4;
  EXPECT_EQ(r.execute(v, all_usable(2)).k, 0);
  v.head(2) << 0.1, 0.9;
  EXPECT_EQ(r.execute(v, {true, false}).k, 0);
}

TEST(DdpgAgent, TerminalTargetsAreRewards) {
  BanditEnv env;
  DDPGAgent agent(env.space(), env.observation_dim(), frozen_config());
  drive(agent, env, 10);
  std::vector<QSample> samples;
  std::vector<Vector> states;
  std::vector<std::size_t> idx{0, 3, 7};
  agent.critic_batch(idx, samples, states);
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(samples[i].target, agent.replay().slot(idx[i]).reward);
}

}  // namespace
}  // namespace hybridrl
