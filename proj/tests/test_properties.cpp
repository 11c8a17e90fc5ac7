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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hybridrl/agent.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/networks.hpp"

namespace hybridrl {
namespace {

// Asymptotic Kolmogorov tail P(K > x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// One-sample KS p-value against U(lo, hi), with the small-sample correction
// sqrt(n) + 0.12 + 0.11 / sqrt(n).
double ks_uniform_p(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

TEST(KolmogorovTail, KnownValues) {
  EXPECT_NEAR(kolmogorov_tail(1.36), 0.0495, 5e-4);
  EXPECT_NEAR(kolmogorov_tail(1.63), 0.0098, 5e-4);
}

TEST(GoalResetProperty, PositionsUniformOnPlate) {
  Rng rng(2024);
  std::vector<double> px, py;
  for (int i = 0; i < 10000; ++i) {
    const auto [s, obs] = goal_reset(rng);
    px.push_back(s.pos.x());
    py.push_back(s.pos.y());
  }
  EXPECT_GT(ks_uniform_p(px, -1.0, 1.0), 0.01);
  EXPECT_GT(ks_uniform_p(py, -1.0, 1.0), 0.01);
}

TEST(GoalResetProperty, KsDetectsNonUniform) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 0.8);
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(u(rng));
  EXPECT_LT(ks_uniform_p(xs, -1.0, 1.0), 0.01);
}

TEST(GoalKinematics, RepeatedPullMatchesClosedForm) {
  const double angle = 0.7;
  Vector dir(2);
  dir << std::cos(angle), std::sin(angle);
  GoalEnvState s;
  s.target = {0.9, -0.9};
  for (int n = 1; n <= 12; ++n) {
    auto [next, r] = goal_step(s, {kGoalPull, dir});
    s = next;
    const double t = 0.1 * n;
    EXPECT_NEAR(s.vel.norm(), 0.1 * n, 1e-12);
    EXPECT_NEAR(s.pos.norm(), 0.5 * t * t, 1e-12);
    if (r.terminal) break;
  }
}

TEST(GoalReward, TelescopesOverRandomEpisodes) {
  Rng rng(31);
  const auto space = goal_action_space();
  for (int ep = 0; ep < 300; ++ep) {
    auto [s, obs] = goal_reset(rng);
    const double d_start = (s.pos - s.target).norm();
    double total = 0.0;
    bool goal = false;
    int steps = 0;
    for (;;) {
      const auto a = sample_uniform_action(space.layout, all_usable(2), rng);
      auto [next, r] = goal_step(s, a);
      s = next;
      total += r.reward;
      ++steps;
      if (r.terminal) {
        goal = r.goal;
        break;
      }
    }
    EXPECT_LE(steps, 200);
    const double d_end = (s.pos - s.target).norm();
    EXPECT_NEAR(total, d_start - d_end + (goal ? 1.0 : 0.0), 1e-12);
  }
}

TEST(UniformExploration, DirectionAnglesAreUniform) {
  Rng rng(5);
  const ParamLayout layout({ParamLayout::direction(0)});
  std::vector<double> angles;
  for (int i = 0; i < 20000; ++i) {
    const Vector x = sample_uniform_params(layout, rng);
    ASSERT_NEAR(x.norm(), 1.0, 1e-12);
    angles.push_back(std::atan2(x[1], x[0]));
  }
  EXPECT_GT(ks_uniform_p(angles, -std::numbers::pi, std::numbers::pi), 0.01);
}

TEST(UniformExploration, HeadsUniformOverUsable) {
  Rng rng(6);
  const ActionMask mask{true, false, true, true};
  std::vector<int> counts(4, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_usable_head(mask, rng))];
  EXPECT_EQ(counts[1], 0);
  for (int k : {0, 2, 3}) EXPECT_NEAR(counts[static_cast<std::size_t>(k)] / static_cast<double>(n), 1.0 / 3.0, 0.01);
}

}  // namespace
}  // namespace hybridrl
