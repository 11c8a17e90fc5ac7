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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "hybridrl/config.hpp"
#include "hybridrl/distributed.hpp"
#include "hybridrl/envs.hpp"
#include "hybridrl/gradcheck.hpp"
#include "hybridrl/pdqn.hpp"
#include "hybridrl/replay.hpp"
#include "hybridrl/training.hpp"

namespace fs = std::filesystem;
using namespace hybridrl;

namespace {

// Pinned tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kBanditParamTol = 0.05;
constexpr double kBanditQTol = 0.1;
constexpr double kBanditBudgetSeconds = 120.0;
constexpr double kGoalRateMin = 0.90;
constexpr double kGoalRewardMin = 0.5;
constexpr double kTargetTol = 1e-12;
constexpr double kPhysicsTol = 1e-12;
constexpr double kTelescopeTol = 1e-12;
constexpr double kChiSquareP = 0.01;
constexpr double kSigmas = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / "hybridrl-acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 1. Analytic gradients against central differences.
Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckOptions opts;
  opts.tolerance = kGradTol;
  const auto reps = run_gradcheck_suite(20, opts);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  int failed = 0;
  std::size_t excluded = 0, total = 0;
  std::set<std::string> losses;
  for (const auto& r : reps) {
    worst = std::max(worst, r.max_rel_error);
    failed += !r.passed;
    excluded += r.excluded;
    total += r.coordinates;
    losses.insert(r.name.substr(0, r.name.find(' ')));
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu losses x 20 seeds, max rel err %.2e, %zu/%zu kink-excluded, %.1fs",
                losses.size(), worst, excluded, total, secs);
  return {failed == 0 && losses.size() == 5 && secs < kGradBudgetSeconds, buf};
}

// 2. Bandit: head 0 chosen, its parameter near 0.3, Q near 1.
Outcome bandit_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  int ok = 0;
  std::string detail;
  for (int seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg = parse_config("env=bandit\nagent=pdqn\n");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.eval_interval = cfg.total_steps;
    cfg.out_dir = scratch_dir("bandit-" + std::to_string(seed));
    run_training(cfg);
    auto env = make_env("bandit");
    auto agent = agent_from_checkpoint(load_checkpoint(cfg.out_dir / "checkpoint.bin", env->space()), *env);
    auto& p = dynamic_cast<PDQNAgent&>(*agent);
    const Vector s0 = Vector::Zero(kBanditObservationDim);
    const auto a = greedy_action(p.q(), p.actor(), s0, all_usable(2));
    const double q = q_forward(p.q(), s0, a.x_all)[a.k];
    const double x0 = a.x_all[0];
    const bool pass = a.k == 0 && std::abs(x0 - 0.3) <= kBanditParamTol && std::abs(q - 1.0) <= kBanditQTol &&
                      cfg.total_steps <= 20000;
    ok += pass;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sseed%d k=%d x0=%.3f Q=%.3f", seed > 1 ? "; " : "", seed, a.k, x0, q);
    detail += buf;
  }
  const double secs = seconds_since(t0);
  detail += "; " + std::to_string(static_cast<int>(secs)) + "s";
  return {ok == 5 && secs < kBanditBudgetSeconds, detail};
}

// Final evaluation of one 150k-step goal run per (agent, seed), shared by 3 and 4.
struct GoalRuns {
  std::vector<EvalReport> pdqn, dqn8, ddpg;
  std::vector<double> pdqn_secs;
};

GoalRuns& goal_runs() {
  static GoalRuns runs = [] {
    GoalRuns r;
    for (const std::string agent : {"pdqn", "dqn8", "ddpg-relaxed"}) {
      for (int seed = 1; seed <= 5; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentConfig cfg = parse_config("env=goal\nagent=" + agent + "\n");
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.eval_interval = cfg.total_steps;
        cfg.out_dir = scratch_dir("goal-" + agent + "-" + std::to_string(seed));
        const auto out = run_training(cfg);
        const auto rep = out.evals.back();
        std::printf("  [goal] %-4s seed %d: mean reward %.4f, goal rate %.2f, mean length %.1f (%.0fs)\n",
                    agent.c_str(), seed, rep.mean_reward, rep.goal_rate, rep.mean_len, seconds_since(t0));
        std::fflush(stdout);
        if (agent == "pdqn") {
          r.pdqn.push_back(rep);
          r.pdqn_secs.push_back(seconds_since(t0));
        } else if (agent == "dqn8") {
          r.dqn8.push_back(rep);
        } else {
          r.ddpg.push_back(rep);
        }
      }
    }
    return r;
  }();
  return runs;
}

// 3. Goal task reproduction.
Outcome goal_reproduction() {
  const auto& r = goal_runs();
  int ok = 0;
  std::string detail;
  for (std::size_t i = 0; i < r.pdqn.size(); ++i) {
    ok += r.pdqn[i].goal_rate >= kGoalRateMin && r.pdqn[i].mean_reward > kGoalRewardMin;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(%.2f, %.3f)", i ? " " : "", r.pdqn[i].goal_rate, r.pdqn[i].mean_reward);
    detail += buf;
  }
  const double slowest = *std::max_element(r.pdqn_secs.begin(), r.pdqn_secs.end());
  detail = std::to_string(ok) + "/5 seeds pass (goal rate, reward): " + detail + "; slowest seed " +
           std::to_string(static_cast<int>(slowest)) + "s";
  return {ok >= 4 && slowest < 1800.0, detail};
}

double sample_variance(const std::vector<EvalReport>& v) {
  double m = 0.0, s = 0.0;
  for (const auto& r : v) m += r.mean_reward;
  m /= static_cast<double>(v.size());
  for (const auto& r : v) s += (r.mean_reward - m) * (r.mean_reward - m);
  return s / static_cast<double>(v.size() - 1);
}

// 4. Baseline ordering.
Outcome baseline_ordering() {
  const auto& r = goal_runs();
  int wins = 0;
  std::string pairs;
  for (std::size_t i = 0; i < r.pdqn.size(); ++i) {
    wins += r.pdqn[i].mean_reward > r.dqn8[i].mean_reward;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.3f/%.3f", i ? " " : "", r.pdqn[i].mean_reward, r.dqn8[i].mean_reward);
    pairs += buf;
  }
  const double var_pdqn = sample_variance(r.pdqn);
  const double var_ddpg = sample_variance(r.ddpg);
  char buf[160];
  std::snprintf(buf, sizeof buf, "; pdqn > dqn8 in %d/5; var ddpg %.3g vs pdqn %.3g", wins, var_ddpg, var_pdqn);
  return {wins >= 4 && var_ddpg > var_pdqn, "pdqn/dqn8 rewards " + pairs + buf};
}

// 5. Segment targets against the direct discounted sum.
Outcome nstep_targets() {
  Rng rng(5);
  auto env = make_env("goal");
  const auto& space = env->space();
  const auto q = QNetwork::make(kGoalObservationDim, 2, 2, {16, 8}, true, 11);
  const auto actor = ParamActor::make(kGoalObservationDim, space.layout, {16}, 12);
  std::uniform_int_distribution<int> len_dist(1, 20);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    RolloutSegment seg;
    const int n = len_dist(rng);
    const double gamma = trial == 0 ? 0.0 : trial == 1 ? 1.0 : unit(rng);
    auto obs = env->reset(rng).observation;
    for (int i = 0; i < n; ++i) {
      seg.states.push_back(obs);
      seg.actions.push_back(sample_uniform_action(space.layout, all_usable(2), rng));
      seg.rewards.push_back(g(rng));
      seg.masks.push_back(all_usable(2));
      for (Eigen::Index j = 0; j < obs.size(); ++j) obs[j] = g(rng);
    }
    seg.final_state = obs;
    seg.final_mask = all_usable(2);
    seg.terminal = unit(rng) < 0.3;
    const auto sg = segment_grads(seg, q, actor, gamma);
    const double boot =
        seg.terminal ? 0.0 : q_forward(q, obs, actor_forward(actor, obs).x_all).maxCoeff();
    for (int i = 0; i < n; ++i) {
      double direct = 0.0;
      for (int j = i; j < n; ++j) direct += std::pow(gamma, j - i) * seg.rewards[static_cast<std::size_t>(j)];
      direct += std::pow(gamma, n - i) * boot;
      worst = std::max(worst, std::abs(direct - sg.targets[static_cast<std::size_t>(i)]));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "1000 segments, max |recursion - direct sum| = %.2e", worst);
  return {worst <= kTargetTol, buf};
}

// 6. One worker, t_max = 1, SGD: same parameter trajectory as the sequential
// replay-free update.
Outcome async_equivalence() {
  AsyncConfig ac;
  ac.workers = 1;
  ac.t_max = 1;
  ac.n_max = 1000;
  ac.optimizer = Optimizer::kSgd;
  ac.seed = 17;
  ac.epsilon = Schedule::linear(1.0, 0.1, 500);
  ac.alpha = Schedule::linear(1e-2, 0.0, 1000);
  ac.beta = Schedule::linear(1e-2, 0.0, 1000);
  AsyncOptions opts;
  opts.make_env = [] { return make_env("bandit"); };
  opts.record_trajectory = true;
  const auto par = run_async(ac, opts);

  auto env = make_env("bandit");
  const auto q0 = QNetwork::make(kBanditObservationDim, 2, 2, ac.q_hidden, ac.dueling, ac.seed * 2 + 1);
  const auto a0 = ParamActor::make(kBanditObservationDim, env->space().layout, ac.actor_hidden, ac.seed * 2 + 2);
  PDQNConfig pc;
  pc.gamma = ac.gamma;
  pc.epsilon = ac.epsilon;
  pc.alpha = ac.alpha;
  pc.beta = ac.beta;
  pc.penalty_weight = ac.penalty_weight;
  const auto seq = run_online_pdqn(*env, q0, a0, pc, 1000, worker_env_seed(ac.seed, 0), worker_act_seed(ac.seed, 0), true);

  std::size_t same = 0;
  const std::size_t n = std::min(par.omega_trajectory.size(), seq.omega_trajectory.size());
  for (std::size_t i = 0; i < n; ++i)
    same += par.omega_trajectory[i] == seq.omega_trajectory[i] && par.theta_trajectory[i] == seq.theta_trajectory[i];
  const bool moved = !(par.q.params == q0.params);
  return {n == 1000 && same == 1000 && par.omega_trajectory.size() == 1000 && moved,
          std::to_string(same) + "/1000 steps bit-identical"};
}

// 7. Environment against closed-form kinematics, plus reward telescoping.
Outcome physics_oracle() {
  Rng rng(7);
  const GoalEnvConfig cfg;
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> run_len(1, 6);
  std::bernoulli_distribution brake_run(0.35);
  double worst = 0.0, worst_tel = 0.0;
  long steps = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto [state, obs] = goal_reset(rng, cfg);
    const double d_start = (state.pos - state.target).norm();
    double reward_sum = 0.0;
    bool goal = false;
    // Runs of identical actions; the oracle evaluates each step from the run's
    // starting state in closed form.
    while (!state.done) {
      const int m = run_len(rng);
      const bool brake = brake_run(rng);
      const double a = angle(rng);
      const Eigen::Vector2d u(std::cos(a), std::sin(a));
      const Eigen::Vector2d p0 = state.pos, v0 = state.vel;
      for (int j = 1; j <= m && !state.done; ++j) {
        HybridAction act{brake ? kGoalBrake : kGoalPull, Vector::Zero(2)};
        if (!brake) act.x_all << u.x(), u.y();
        auto [next, r] = goal_step(state, act, cfg);
        ++steps;
        Eigen::Vector2d p, v;
        if (brake) {
          const double s0 = v0.norm();
          const double s = std::max(0.0, s0 - 0.1 * j);
          p = p0;
          v = s <= 1e-9 ? Eigen::Vector2d::Zero() : Eigen::Vector2d(v0 * (s / s0));
        } else {
          const double t = 0.1 * j;
          p = p0 + v0 * t + 0.5 * u * t * t;
          v = v0 + u * t;
        }
        worst = std::max({worst, (next.pos - p).cwiseAbs().maxCoeff(), (next.vel - v).cwiseAbs().maxCoeff()});
        reward_sum += r.reward;
        goal = r.goal;
        state = next;
      }
    }
    const double d_end = (state.pos - state.target).norm();
    worst_tel = std::max(worst_tel, std::abs(reward_sum - (d_start - d_end + (goal ? 1.0 : 0.0))));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "10000 sequences, %ld steps, max kinematics err %.2e, max telescoping err %.2e",
                steps, worst, worst_tel);
  return {worst <= kPhysicsTol && worst_tel <= kTelescopeTol, buf};
}

// 8. Replay sampling uniformity and exploration frequency.
Outcome statistical_contracts() {
  const std::size_t n = 100, batch = 32;
  ReplayBuffer buf(n);
  for (std::size_t i = 0; i < n; ++i) buf.push({Vector::Zero(1), {0, Vector::Zero(0)}, 0.0, Vector::Zero(1), true, {}, {}});
  Rng rng(8);
  std::vector<double> counts(n, 0.0);
  std::size_t draws = 0;
  while (draws < 100000) {
    for (auto i : buf.sample_indices(batch, rng)) {
      if (draws == 100000) break;
      counts[i] += 1.0;
      ++draws;
    }
  }
  const double expected = static_cast<double>(draws) / static_cast<double>(n);
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(static_cast<double>(n - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));

  auto env = make_env("goal");
  const auto q = QNetwork::make(kGoalObservationDim, 2, 2, {16}, true, 3);
  const auto actor = ParamActor::make(kGoalObservationDim, env->space().layout, {16}, 4);
  const Vector s = env->reset(rng).observation;
  const double eps = 0.3;
  const int trials = 100000;
  int explored = 0;
  for (int i = 0; i < trials; ++i)
    explored += pdqn_epsilon_greedy(q, actor, s, all_usable(2), eps, {}, rng).explored;
  const double sigma = std::sqrt(trials * eps * (1.0 - eps));
  const double z = (explored - trials * eps) / sigma;
  char out[160];
  std::snprintf(out, sizeof out, "replay chi2=%.1f (df=%zu) p=%.3f; exploration %d/%d, z=%.2f", chi2, n - 1, p,
                explored, trials, z);
  return {p > kChiSquareP && std::abs(z) <= kSigmas, out};
}

// 9. Masked bandit: no masked head is ever executed, and a single usable head
// bootstraps from that head alone.
Outcome masking_contract() {
  ExperimentConfig cfg = parse_config("env=masked-bandit\n");
  cfg.seed = 9;
  auto env = make_env("masked-bandit");
  auto agent_ptr = make_agent(cfg, *env);
  auto& agent = dynamic_cast<PDQNAgent&>(*agent_ptr);
  Rng rng(9);
  int violations = 0, errors = 0;
  for (int ep = 0; ep < 10000; ++ep) {
    auto r = env->reset(rng);
    const auto a = agent.act(r.observation, r.mask, true);
    if (!r.mask[static_cast<std::size_t>(a.env.k)]) ++violations;
    try {
      auto sr = env->step(a.env);
      agent.observe(r.observation, a, sr.reward, sr.observation, sr.terminal, sr.mask);
    } catch (const InvalidActionError&) {
      ++errors;
    }
  }
  // Single usable head: the bootstrap is that head's value, bit for bit.
  int mismatches = 0;
  for (int k = 0; k < 2; ++k) {
    ActionMask m(2, false);
    m[static_cast<std::size_t>(k)] = true;
    const Vector s1 = Vector::Constant(1, 0.25 * (k + 1));
    const double y = compute_target(agent.q(), agent.actor(), 0.7, s1, false, m, 0.9);
    const double direct = 0.7 + 0.9 * q_forward(agent.q(), s1, actor_forward(agent.actor(), s1).x_all)[k];
    mismatches += y != direct;
  }
  return {violations == 0 && errors == 0 && mismatches == 0,
          "10000 episodes, " + std::to_string(violations) + " masked selections, " + std::to_string(errors) +
              " env rejections, " + std::to_string(mismatches) + " bootstrap mismatches"};
}

// 10. Targets depend on the stored transitions and the networks only.
Outcome offpolicy_invariance() {
  auto env = make_env("goal");
  PDQNConfig lo;
  lo.epsilon = Schedule::constant(0.1);
  lo.seed = 10;
  PDQNConfig hi = lo;
  hi.epsilon = Schedule::constant(0.9);
  PDQNAgent a(env->space(), kGoalObservationDim, lo), b(env->space(), kGoalObservationDim, hi);
  b.import_tensors(a.export_tensors());

  // Different behaviour histories: each agent acts on its own stream.
  for (auto* ag : {&a, &b}) {
    Rng rng(ag == &a ? 100 : 200);
    auto e = env->clone();
    auto obs = e->reset(rng).observation;
    for (int i = 0; i < 500; ++i) {
      const auto act = ag->act(obs, all_usable(2), true);
      auto sr = e->step(act.env);
      obs = sr.terminal ? e->reset(rng).observation : sr.observation;
    }
  }
  // The same frozen buffer in both.
  Rng rng(10);
  auto e = env->clone();
  auto obs = e->reset(rng).observation;
  for (int i = 0; i < 2000; ++i) {
    const auto act = pdqn_epsilon_greedy(a.q(), a.actor(), obs, all_usable(2), 1.0, {}, rng);
    auto sr = e->step(act.env);
    const Transition tr{obs, act.internal, sr.reward, sr.observation, sr.terminal, sr.mask, all_usable(2)};
    a.replay().push(tr);
    b.replay().push(tr);
    obs = sr.terminal ? e->reset(rng).observation : sr.observation;
  }
  std::vector<const Transition*> batch_a, batch_b;
  for (std::size_t i = 0; i < a.replay().size(); ++i) {
    batch_a.push_back(&a.replay().at(i));
    batch_b.push_back(&b.replay().at(i));
  }
  const auto ya = compute_targets(a.q(), a.actor(), batch_a, lo.gamma);
  const auto yb = compute_targets(b.q(), b.actor(), batch_b, hi.gamma);
  std::size_t same = 0;
  for (std::size_t i = 0; i < ya.size(); ++i) same += ya[i] == yb[i];
  return {same == ya.size() && a.epsilon() != b.epsilon(),
          std::to_string(same) + "/" + std::to_string(ya.size()) + " targets bit-identical under eps 0.1 vs 0.9"};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient oracle suite", gradient_oracle},
      {"quadratic bandit convergence", bandit_convergence},
      {"goal task: P-DQN reaches the goal", goal_reproduction},
      {"goal task: baseline ordering", baseline_ordering},
      {"n-step target recursion", nstep_targets},
      {"async / sequential equivalence", async_equivalence},
      {"environment physics oracle", physics_oracle},
      {"statistical contracts", statistical_contracts},
      {"masking contract", masking_contract},
      {"off-policy target invariance", offpolicy_invariance},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
