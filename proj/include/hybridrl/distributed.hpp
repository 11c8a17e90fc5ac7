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

// Asynchronous n-step P-DQN. Workers own independent environments, pull a
// consistent (omega, theta) snapshot from a parameter server, roll out at
// most t_max steps, accumulate n-step gradients against the snapshot and
// push them back. The server applies each gradient pair atomically with a
// shared RMSProp state.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hybridrl/agent.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/networks.hpp"
#include "hybridrl/optim.hpp"
#include "hybridrl/pdqn.hpp"
#include "hybridrl/schedule.hpp"

namespace hybridrl {

struct AsyncConfig {
  int workers = 1;
  int t_max = 5;
  std::int64_t n_max = 150000;
  double gamma = 0.9;
  Schedule epsilon = Schedule::linear(1.0, 0.1, 30000);
  Schedule alpha = Schedule::linear(1e-3, 0.0, 150000);
  Schedule beta = Schedule::linear(1e-3, 0.0, 150000);
  double penalty_weight = 1.0;
  Optimizer optimizer = Optimizer::kRmsprop;  // kSgd for the sequential-equivalence check
  RMSPropConfig rmsprop;
  ExplorationDist exploration;
  std::vector<int> actor_hidden{64, 32};
  std::vector<int> q_hidden{64, 32, 32};
  bool dueling = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (workers < 1) throw ConfigError("worker count must be >= 1");
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (n_max < 0) throw ConfigError("n_max must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    epsilon.validate();
    alpha.validate();
    beta.validate();
  }
};

inline std::uint64_t worker_env_seed(std::uint64_t seed, int worker) { return seed * 7919 + 2 * worker + 101; }
inline std::uint64_t worker_act_seed(std::uint64_t seed, int worker) { return seed * 7919 + 2 * worker + 102; }

// Holds the global omega and theta. Snapshots and applies are serialized by
// one mutex, so every snapshot is a single version of both parameter sets.
class ParameterServer {
 public:
  struct Snapshot {
    MLPParams omega;
    MLPParams theta;
    std::uint64_t version = 0;
  };

  ParameterServer(QNetwork q, ParamActor actor, Optimizer optimizer = Optimizer::kRmsprop,
                  RMSPropConfig rmsprop = {})
      : q_(std::move(q)), actor_(std::move(actor)), optimizer_(optimizer) {
    omega_opt_ = RMSPropState::for_params(q_.params, rmsprop);
    theta_opt_ = RMSPropState::for_params(actor_.params, rmsprop);
  }

  Snapshot snapshot() const {
    std::lock_guard lock(mu_);
    return {q_.params, actor_.params, version_};
  }

  // Applies one (d_omega, d_theta) pair as a unit. Shape mismatches are
  // rejected before anything is modified.
  std::uint64_t apply(const Gradients& d_omega, const Gradients& d_theta, double lr_omega, double lr_theta) {
    std::lock_guard lock(mu_);
    if (!q_.params.same_shape(d_omega) || !actor_.params.same_shape(d_theta))
      throw ShapeError("parameter server: gradient shape mismatch");
    if (!d_omega.all_finite() || !d_theta.all_finite())
      throw NonFiniteError("parameter server: non-finite gradient");
    apply_update(q_.params, d_omega, lr_omega, optimizer_, &omega_opt_);
    apply_update(actor_.params, d_theta, lr_theta, optimizer_, &theta_opt_);
    return ++version_;
  }

  // Reserves one global environment step; returns the count before it.
  std::int64_t take_step() { return n_step_.fetch_add(1, std::memory_order_relaxed); }
  std::int64_t steps() const { return n_step_.load(std::memory_order_relaxed); }
  void set_steps(std::int64_t n) { n_step_.store(n); }

  std::uint64_t version() const {
    std::lock_guard lock(mu_);
    return version_;
  }

  QNetwork q() const {
    std::lock_guard lock(mu_);
    return q_;
  }
  ParamActor actor() const {
    std::lock_guard lock(mu_);
    return actor_;
  }

 private:
  mutable std::mutex mu_;
  QNetwork q_;
  ParamActor actor_;
  Optimizer optimizer_;
  RMSPropState omega_opt_;
  RMSPropState theta_opt_;
  std::uint64_t version_ = 0;
  std::atomic<std::int64_t> n_step_{0};
};

inline ParameterServer::Snapshot worker_sync(const ParameterServer& server) { return server.snapshot(); }

// Environment owned by one worker, carried across segments.
struct WorkerEnv {
  std::unique_ptr<Environment> env;
  Rng env_rng;
  Vector obs;
  ActionMask mask;
  bool need_reset = true;
  // running episode bookkeeping for logs
  std::int64_t episode = 0;
  int ep_len = 0;
  double ep_reward = 0.0;
};

struct RolloutSegment {
  std::vector<Vector> states;
  std::vector<HybridAction> actions;
  std::vector<double> rewards;
  std::vector<ActionMask> masks;  // availability at each state
  std::vector<std::int64_t> global_steps;
  std::vector<double> epsilons;
  Vector final_state;
  ActionMask final_mask;
  bool terminal = false;
  bool goal = false;

  std::size_t size() const { return rewards.size(); }
};

// epsilon-greedy rollout against a fixed snapshot; stops at a terminal state
// or after t_max steps. `epsilon_at` maps the global step count to epsilon.
inline RolloutSegment worker_rollout(WorkerEnv& we, const QNetwork& q, const ParamActor& actor, int t_max,
                                     const std::function<double(std::int64_t)>& epsilon_at,
                                     const ExplorationDist& exploration, Rng& act_rng,
                                     const std::function<std::int64_t()>& take_step) {
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  RolloutSegment seg;
  if (we.need_reset) {
    auto r = we.env->reset(we.env_rng);
    we.obs = std::move(r.observation);
    we.mask = std::move(r.mask);
    we.need_reset = false;
    we.ep_len = 0;
    we.ep_reward = 0.0;
  }
  for (int i = 0; i < t_max; ++i) {
    const std::int64_t n = take_step();
    const double eps = epsilon_at(n);
    const auto a = pdqn_epsilon_greedy(q, actor, we.obs, we.mask, eps, exploration, act_rng);
    auto sr = we.env->step(a.env);
    seg.states.push_back(we.obs);
    seg.actions.push_back(a.internal);
    seg.rewards.push_back(sr.reward);
    seg.masks.push_back(we.mask);
    seg.global_steps.push_back(n + 1);
    seg.epsilons.push_back(eps);
    we.obs = std::move(sr.observation);
    we.mask = std::move(sr.mask);
    ++we.ep_len;
    we.ep_reward += sr.reward;
    if (sr.terminal) {
      seg.terminal = true;
      seg.goal = sr.goal;
      we.need_reset = true;
      break;
    }
  }
  seg.final_state = we.obs;
  seg.final_mask = we.mask;
  return seg;
}

struct SegmentGrads {
  Gradients d_omega;
  Gradients d_theta;
  std::vector<double> targets;  // targets[i] for segment step i
  double loss_q = 0.0;          // summed over the segment
  double loss_theta = 0.0;
};

// Bootstrap y = 0 at a terminal end, else max over usable k of
// Q(s_end, k, x(s_end)); then y <- r_i + gamma y backwards, accumulating the
// per-step gradients of 1/2 (Q(s_i, k_i, x_i) - y)^2 and of l_Theta(s_i).
inline SegmentGrads segment_grads(const RolloutSegment& seg, const QNetwork& q, const ParamActor& actor,
                                  double gamma, double penalty_weight = 1.0) {
  if (seg.size() == 0) throw Error("segment_grads: empty segment");
  SegmentGrads out{Gradients::zeros_like(q.params), Gradients::zeros_like(actor.params),
                   std::vector<double>(seg.size()), 0.0, 0.0};
  double y = 0.0;
  if (!seg.terminal) y = masked_max(q_forward(q, seg.final_state, actor_forward(actor, seg.final_state).x_all), seg.final_mask);
  for (std::size_t i = seg.size(); i-- > 0;) {
    y = seg.rewards[i] + gamma * y;
    out.targets[i] = y;
    const auto ql = q_loss_grad(q, {{seg.states[i], seg.actions[i], y}});
    const auto tl = theta_loss_grad(actor, q, {seg.states[i]}, ThetaLossOptions{penalty_weight, false});
    out.d_omega += ql.grads;
    out.d_theta += tl.grads;
    out.loss_q += ql.loss;
    out.loss_theta += tl.loss;
  }
  return out;
}

// One row per environment step, written by the worker that took it.
struct AsyncLogRow {
  std::int64_t timestamp_ns = 0;
  int worker = 0;
  std::int64_t step = 0;  // global step count after this step
  std::int64_t episode = 0;
  int ep_len = 0;
  double ep_reward = 0.0;
  double loss_q = 0.0;
  double loss_theta = 0.0;
  double epsilon = 0.0;
  double lr_omega = 0.0;
  double lr_theta = 0.0;
  bool terminal = false;
  bool goal = false;
};

struct AsyncResult {
  QNetwork q;
  ParamActor actor;
  std::int64_t n_step = 0;
  std::uint64_t version = 0;
  std::vector<AsyncLogRow> log;  // merged across workers by timestamp
  std::int64_t episodes = 0;  // episodes started, counting from initial_episode
  std::vector<std::size_t> rows_per_worker;
  std::vector<MLPParams> omega_trajectory;  // single-worker recording only
  std::vector<MLPParams> theta_trajectory;
};

struct AsyncOptions {
  std::filesystem::path log_dir;  // when set, writes worker-<id>.csv
  bool record_trajectory = false;
  std::function<std::unique_ptr<Environment>()> make_env;
  // Starting parameters; freshly initialized from the seed when absent.
  const QNetwork* initial_q = nullptr;
  const ParamActor* initial_actor = nullptr;
  std::int64_t initial_step = 0;  // resumed runs continue the global counter
  std::int64_t initial_episode = 0;
  // Called with a fresh snapshot each time the global step count passes a
  // multiple of progress_interval (up to n_max). Calls are serialized.
  std::int64_t progress_interval = 0;
  std::function<void(std::int64_t step, std::int64_t episodes, const QNetwork&, const ParamActor&)> on_progress;
};

inline void write_worker_csv(const std::filesystem::path& path, const std::vector<AsyncLogRow>& rows) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(9);
  f << "timestamp_ns,worker,step,episode,ep_len,ep_reward,loss_q,loss_theta,epsilon,lr_omega,lr_theta\n";
  for (const auto& r : rows)
    f << r.timestamp_ns << ',' << r.worker << ',' << r.step << ',' << r.episode << ',' << r.ep_len << ','
      << r.ep_reward << ',' << r.loss_q << ',' << r.loss_theta << ',' << r.epsilon << ',' << r.lr_omega << ','
      << r.lr_theta << '\n';
}

// Runs workers until the global step counter reaches n_max. With one worker
// everything runs on the calling thread, which makes the run deterministic.
inline AsyncResult run_async(const AsyncConfig& cfg, const AsyncOptions& opts) {
  cfg.validate();
  if (!opts.make_env) throw ConfigError("run_async: no environment factory");
  const auto probe = opts.make_env();
  const auto& space = probe->space();
  QNetwork q0 = opts.initial_q ? *opts.initial_q
                               : QNetwork::make(probe->observation_dim(), space.num_heads(), space.param_dim(),
                                                cfg.q_hidden, cfg.dueling, cfg.seed * 2 + 1);
  ParamActor a0 = opts.initial_actor
                      ? *opts.initial_actor
                      : ParamActor::make(probe->observation_dim(), space.layout, cfg.actor_hidden, cfg.seed * 2 + 2);
  ParameterServer server(q0, a0, cfg.optimizer, cfg.rmsprop);
  server.set_steps(opts.initial_step);
  std::atomic<std::int64_t> next_episode{opts.initial_episode};
  std::mutex progress_mu;
  std::int64_t next_progress =
      opts.progress_interval > 0 ? (opts.initial_step / opts.progress_interval + 1) * opts.progress_interval : 0;

  std::vector<std::vector<AsyncLogRow>> logs(static_cast<std::size_t>(cfg.workers));
  std::vector<MLPParams> omega_traj, theta_traj;
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::string first_error;
  const auto t0 = std::chrono::steady_clock::now();

  auto worker = [&](int id) {
    try {
      WorkerEnv we{opts.make_env(), Rng(worker_env_seed(cfg.seed, id)), {}, {}, true, 0, 0, 0.0};
      Rng act_rng(worker_act_seed(cfg.seed, id));
      QNetwork q_local = server.q();
      ParamActor actor_local = server.actor();
      auto& log = logs[static_cast<std::size_t>(id)];
      const auto eps_at = [&](std::int64_t n) { return schedule_value(cfg.epsilon, n); };
      const auto take = [&] { return server.take_step(); };
      while (!abort.load() && server.steps() < cfg.n_max) {
        auto snap = worker_sync(server);
        q_local.params = std::move(snap.omega);
        actor_local.params = std::move(snap.theta);
        if (we.need_reset) we.episode = next_episode.fetch_add(1);
        const std::int64_t episode = we.episode;
        const auto seg = worker_rollout(we, q_local, actor_local, cfg.t_max, eps_at, cfg.exploration, act_rng, take);
        const auto g = segment_grads(seg, q_local, actor_local, cfg.gamma, cfg.penalty_weight);
        const std::int64_t n = server.steps();
        const double lr_w = schedule_value(cfg.alpha, n);
        const double lr_t = schedule_value(cfg.beta, n);
        server.apply(g.d_omega, g.d_theta, lr_w, lr_t);
        if (opts.record_trajectory && cfg.workers == 1) {
          auto s = server.snapshot();
          omega_traj.push_back(std::move(s.omega));
          theta_traj.push_back(std::move(s.theta));
        }
        const auto now =
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
        const double inv = 1.0 / static_cast<double>(seg.size());
        // Per-step rows; ep_len and ep_reward are running totals at that step.
        int len = we.ep_len - static_cast<int>(seg.size());
        double rew = we.ep_reward;
        for (std::size_t i = 0; i < seg.size(); ++i) rew -= seg.rewards[i];
        for (std::size_t i = 0; i < seg.size(); ++i) {
          ++len;
          rew += seg.rewards[i];
          const bool last = i + 1 == seg.size();
          log.push_back({now, id, seg.global_steps[i], episode, len, rew, g.loss_q * inv, g.loss_theta * inv,
                         seg.epsilons[i], lr_w, lr_t, last && seg.terminal, last && seg.goal});
        }
        if (opts.on_progress && opts.progress_interval > 0) {
          std::lock_guard lock(progress_mu);
          const std::int64_t reached = std::min(server.steps(), cfg.n_max);
          if (next_progress <= reached) {
            // one snapshot, so omega and theta come from the same version
            auto snap2 = server.snapshot();
            QNetwork qs = q_local;
            ParamActor as = actor_local;
            qs.params = std::move(snap2.omega);
            as.params = std::move(snap2.theta);
            for (; next_progress <= reached; next_progress += opts.progress_interval) opts.on_progress(next_progress, next_episode.load(), qs, as);
          }
        }
      }
    } catch (const std::exception& e) {
      abort.store(true);
      std::lock_guard lock(err_mu);
      if (first_error.empty()) first_error = "worker " + std::to_string(id) + ": " + e.what();
    }
  };

  if (cfg.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < cfg.workers; ++i) threads.emplace_back(worker, i);
    for (auto& t : threads) t.join();
  }
  if (!first_error.empty()) throw Error("async run aborted: " + first_error);

  AsyncResult res;
  res.q = server.q();
  res.actor = server.actor();
  res.n_step = server.steps();
  res.version = server.version();
  res.episodes = next_episode.load();
  res.omega_trajectory = std::move(omega_traj);
  res.theta_trajectory = std::move(theta_traj);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    res.rows_per_worker.push_back(logs[i].size());
    if (!opts.log_dir.empty()) write_worker_csv(opts.log_dir / ("worker-" + std::to_string(i) + ".csv"), logs[i]);
    res.log.insert(res.log.end(), logs[i].begin(), logs[i].end());
  }
  std::stable_sort(res.log.begin(), res.log.end(), [](const AsyncLogRow& a, const AsyncLogRow& b) {
    return a.timestamp_ns != b.timestamp_ns ? a.timestamp_ns < b.timestamp_ns : a.step < b.step;
  });
  return res;
}

}  // namespace hybridrl
