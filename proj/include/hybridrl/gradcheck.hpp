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

// Finite-difference checks of every trained loss: the P-DQN Q regression and
// actor losses, the discretized-DQN loss, and the relaxed DDPG critic and
// actor losses.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hybridrl/agent.hpp"
#include "hybridrl/ddpg.hpp"
#include "hybridrl/dqn.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/mlp.hpp"
#include "hybridrl/networks.hpp"

namespace hybridrl {

struct GradCheckOptions {
  double eps = 1e-6;
  double tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-4;
  // A coordinate counts as sitting on a kink (ReLU switch, argmax change)
  // when its forward and backward one-sided slopes differ by more than this.
  double kink_threshold = 1e-4;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckReport {
  std::string name;
  std::size_t coordinates = 0;
  std::size_t excluded = 0;
  double max_rel_error = 0.0;
  std::size_t worst = 0;
  bool passed = true;
};

// Compares `analytic` against central differences of `loss_fn` around
// `params`, skipping kink-adjacent coordinates.
template <class F>
GradCheckReport check_gradient(const std::string& name, F&& loss_fn, const MLPParams& params,
                               const Gradients& analytic, const GradCheckOptions& opts = {}) {
  if (!params.same_shape(analytic)) throw ShapeError("check_gradient: gradient shape mismatch");
  GradCheckReport rep;
  rep.name = name;
  MLPParams work = params;
  const double f0 = loss_fn(static_cast<const MLPParams&>(work));
  const std::size_t n = params.coordinate_count();
  rep.coordinates = n;
  for (std::size_t i = 0; i < n; ++i) {
    double& w = work.coordinate(i);
    const double w0 = w;
    w = w0 + opts.eps;
    const double up = loss_fn(static_cast<const MLPParams&>(work));
    w = w0 - opts.eps;
    const double down = loss_fn(static_cast<const MLPParams&>(work));
    w = w0;
    if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteError(name + ": loss not finite");
    const double fwd = (up - f0) / opts.eps;
    const double bwd = (f0 - down) / opts.eps;
    if (std::abs(fwd - bwd) > opts.kink_threshold * std::max(1.0, std::abs(fwd) + std::abs(bwd))) {
      ++rep.excluded;
      continue;
    }
    const double numeric = (up - down) / (2.0 * opts.eps);
    const double err = relative_error(analytic.coordinate(i), numeric, opts.floor);
    if (err > rep.max_rel_error) {
      rep.max_rel_error = err;
      rep.worst = i;
    }
  }
  rep.passed = rep.max_rel_error <= opts.tolerance;
  return rep;
}

namespace gradcheck_detail {

inline std::vector<Vector> random_states(int dim, int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) {
    Vector s(dim);
    for (int j = 0; j < dim; ++j) s[j] = g(rng);
    out.push_back(std::move(s));
  }
  return out;
}

// Space with every block kind; the narrow box makes the bound penalty active.
inline ActionSpaceSpec mixed_space() {
  Vector lo(2), hi(2);
  lo << -0.05, -1.0;
  hi << 0.05, 0.02;
  ParamLayout layout({ParamLayout::none(0), ParamLayout::direction(1), ParamLayout::box(2, lo, hi),
                      ParamLayout::free(3, 3)});
  return {layout, {"none", "dir", "box", "free"}};
}

inline std::vector<int> pick_hidden(Rng& rng, bool actor) {
  static const std::vector<std::vector<int>> q_shapes{{8}, {16, 8}, {32, 16}, {64, 32, 32}};
  static const std::vector<std::vector<int>> a_shapes{{8}, {16, 8}, {64, 32}};
  const auto& pool = actor ? a_shapes : q_shapes;
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

}  // namespace gradcheck_detail

// One report per (loss, seed). Seeds are 1..seeds.
inline std::vector<GradCheckReport> run_gradcheck_suite(int seeds = 20, const GradCheckOptions& opts = {}) {
  using namespace gradcheck_detail;
  std::vector<GradCheckReport> out;
  const int batch = 4;
  for (int seed = 1; seed <= seeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) * 1000003ULL);
    const ActionSpaceSpec space = (seed % 2 == 0) ? goal_action_space() : mixed_space();
    const int sdim = 3 + seed % 6;
    const std::string tag = " seed=" + std::to_string(seed);
    const auto states = random_states(sdim, batch, rng);
    std::normal_distribution<double> g(0.0, 1.0);

    // P-DQN Q regression.
    {
      const auto q = QNetwork::make(sdim, space.num_heads(), space.param_dim(), pick_hidden(rng, false), seed % 3 != 0,
                                    rng());
      std::vector<QSample> samples;
      for (const auto& s : states) samples.push_back({s, sample_uniform_action(space.layout, all_usable(space.num_heads()), rng), g(rng)});
      const auto lg = q_loss_grad(q, samples);
      out.push_back(check_gradient(
          "pdqn.loss_q" + tag,
          [&](const MLPParams& p) {
            QNetwork qq = q;
            qq.params = p;
            return q_loss_grad(qq, samples).loss;
          },
          q.params, lg.grads, opts));
    }
    // P-DQN actor loss, optionally with masked heads dropped.
    {
      const auto q = QNetwork::make(sdim, space.num_heads(), space.param_dim(), pick_hidden(rng, false), seed % 3 != 1,
                                    rng());
      const auto actor = ParamActor::make(sdim, space.layout, pick_hidden(rng, true), rng());
      std::vector<ActionMask> masks;
      std::bernoulli_distribution coin(0.5);
      for (int i = 0; i < batch; ++i) {
        ActionMask m(static_cast<std::size_t>(space.num_heads()));
        for (auto&& b : m) b = coin(rng);
        m[static_cast<std::size_t>(i % space.num_heads())] = true;
        masks.push_back(std::move(m));
      }
      const ThetaLossOptions topts{1.0 + seed % 3, seed % 4 == 0};
      const auto* mp = topts.exclude_masked ? &masks : nullptr;
      const auto lg = theta_loss_grad(actor, q, states, topts, mp);
      out.push_back(check_gradient(
          "pdqn.loss_theta" + tag,
          [&](const MLPParams& p) {
            ParamActor aa = actor;
            aa.params = p;
            return theta_loss_grad(aa, q, states, topts, mp).loss;
          },
          actor.params, lg.grads, opts));
    }
    // Discretized DQN: one output per table entry, no parameter inputs.
    {
      const auto table = dqn_discretize(goal_action_space(), 8);
      const auto q = QNetwork::make(sdim, table.size(), 0, pick_hidden(rng, false), true, rng());
      std::uniform_int_distribution<int> pick(0, table.size() - 1);
      std::vector<QSample> samples;
      for (const auto& s : states) samples.push_back({s, {pick(rng), Vector::Zero(0)}, g(rng)});
      const auto lg = q_loss_grad(q, samples);
      out.push_back(check_gradient(
          "dqn.loss" + tag,
          [&](const MLPParams& p) {
            QNetwork qq = q;
            qq.params = p;
            return q_loss_grad(qq, samples).loss;
          },
          q.params, lg.grads, opts));
    }
    // Relaxed DDPG critic and actor.
    {
      const auto relaxed = ddpg_relax_space(space);
      const auto critic = QNetwork::make(sdim, 1, relaxed.dim(), pick_hidden(rng, false), false, rng());
      const auto actor = ParamActor::make(sdim, relaxed.layout, pick_hidden(rng, true), rng());
      std::vector<QSample> samples;
      for (const auto& s : states) samples.push_back({s, {0, sample_uniform_params(relaxed.layout, rng)}, g(rng)});
      const auto cl = q_loss_grad(critic, samples);
      out.push_back(check_gradient(
          "ddpg.critic" + tag,
          [&](const MLPParams& p) {
            QNetwork qq = critic;
            qq.params = p;
            return q_loss_grad(qq, samples).loss;
          },
          critic.params, cl.grads, opts));
      const ThetaLossOptions topts{1.0, false};
      const auto al = theta_loss_grad(actor, critic, states, topts);
      out.push_back(check_gradient(
          "ddpg.actor" + tag,
          [&](const MLPParams& p) {
            ParamActor aa = actor;
            aa.params = p;
            return theta_loss_grad(aa, critic, states, topts).loss;
          },
          actor.params, al.grads, opts));
    }
  }
  return out;
}

}  // namespace hybridrl
