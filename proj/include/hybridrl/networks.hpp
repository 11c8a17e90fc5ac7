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

#include <cmath>
#include <cstdint>
#include <vector>

#include "hybridrl/action_space.hpp"
#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"

namespace hybridrl {

// Q(s, k, x; w) for all K heads at once. The input is the state concatenated
// with every head's parameters. With `dueling`, the last layer emits one value
// node followed by K advantage nodes, combined as Q_k = V + A_k - mean(A).
struct QNetwork {
  MLPSpec spec;
  MLPParams params;
  int state_dim = 0;
  int num_heads = 0;
  int param_dim = 0;
  bool dueling = false;

  static QNetwork make(int state_dim, int num_heads, int param_dim, const std::vector<int>& hidden, bool dueling,
                       std::uint64_t seed) {
    QNetwork q;
    q.state_dim = state_dim;
    q.num_heads = num_heads;
    q.param_dim = param_dim;
    q.dueling = dueling;
    q.spec = MLPSpec::make(state_dim + param_dim, hidden, dueling ? num_heads + 1 : num_heads);
    q.params = init_params(q.spec, seed);
    return q;
  }

  int input_dim() const { return state_dim + param_dim; }
};

// x(s; theta): raw network output of dimension D followed by a per-block
// transform. Direction pairs are L2-normalized; box and free blocks pass raw.
struct ParamActor {
  MLPSpec spec;
  MLPParams params;
  ParamLayout layout;
  int state_dim = 0;

  static ParamActor make(int state_dim, const ParamLayout& layout, const std::vector<int>& hidden,
                         std::uint64_t seed) {
    ParamActor a;
    a.state_dim = state_dim;
    a.layout = layout;
    a.spec = MLPSpec::make(state_dim, hidden, layout.total_dim());
    a.params = init_params(a.spec, seed);
    return a;
  }
};

// Stacks states (S x B) over parameters (D x B).
inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) throw ShapeError("column count mismatch when stacking inputs");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

struct QForward {
  Matrix q;  // K x B
  ForwardResult net;
};

inline QForward q_forward_batch(const QNetwork& q, const Matrix& states, const Matrix& xs) {
  if (states.rows() != q.state_dim) throw ShapeError("Q state dimension mismatch");
  if (xs.rows() != q.param_dim) throw ShapeError("Q parameter dimension mismatch");
  QForward out;
  out.net = mlp_forward(q.spec, q.params, stack_rows(states, xs));
  const Matrix& raw = out.net.output;
  if (q.dueling) {
    const Matrix adv = raw.bottomRows(q.num_heads);
    const Eigen::RowVectorXd centre = raw.row(0) - adv.colwise().mean();
    out.q = adv;
    out.q.rowwise() += centre;
  } else {
    out.q = raw;
  }
  return out;
}

inline Vector q_forward(const QNetwork& q, const Vector& state, const Vector& x_all) {
  return q_forward_batch(q, Matrix(state), Matrix(x_all)).q.col(0);
}

// Back-propagates dL/dQ (K x B) to the network input and (optionally) to w.
inline BackwardResult q_backward(const QNetwork& q, const QForward& fwd, const Matrix& dq,
                                 bool want_param_grads = true) {
  if (dq.rows() != q.num_heads || dq.cols() != fwd.q.cols()) throw ShapeError("dL/dQ shape mismatch");
  if (!q.dueling) return mlp_backward(q.spec, q.params, fwd.net.cache, dq, want_param_grads);
  Matrix draw(q.num_heads + 1, dq.cols());
  draw.row(0) = dq.colwise().sum();
  const Eigen::RowVectorXd mean_dq = dq.colwise().mean();
  draw.bottomRows(q.num_heads) = dq;
  draw.bottomRows(q.num_heads).rowwise() -= mean_dq;
  return mlp_backward(q.spec, q.params, fwd.net.cache, draw, want_param_grads);
}

// Applies the per-block output transform to raw actor outputs (D x B).
// A zero direction pair maps to (1, 0).
inline Matrix transform_blocks(const ParamLayout& layout, const Matrix& raw) {
  Matrix x = raw;
  for (const auto& b : layout.blocks) {
    if (b.kind != BlockKind::kDirectionPair) continue;
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      const double u = raw(b.offset, c), v = raw(b.offset + 1, c);
      const double n = std::hypot(u, v);
      if (n == 0.0) {
        x(b.offset, c) = 1.0;
        x(b.offset + 1, c) = 0.0;
      } else {
        x(b.offset, c) = u / n;
        x(b.offset + 1, c) = v / n;
      }
    }
  }
  return x;
}

// Pulls dL/dx back through transform_blocks. The normalize Jacobian is
// (I - y y^T) / |r|; at r = 0 it is taken as zero.
inline Matrix transform_blocks_backward(const ParamLayout& layout, const Matrix& raw, const Matrix& x,
                                        const Matrix& dx) {
  Matrix draw = dx;
  for (const auto& b : layout.blocks) {
    if (b.kind != BlockKind::kDirectionPair) continue;
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      const double n = std::hypot(raw(b.offset, c), raw(b.offset + 1, c));
      if (n == 0.0) {
        draw(b.offset, c) = 0.0;
        draw(b.offset + 1, c) = 0.0;
        continue;
      }
      const double y0 = x(b.offset, c), y1 = x(b.offset + 1, c);
      const double g0 = dx(b.offset, c), g1 = dx(b.offset + 1, c);
      const double dot = y0 * g0 + y1 * g1;
      draw(b.offset, c) = (g0 - y0 * dot) / n;
      draw(b.offset + 1, c) = (g1 - y1 * dot) / n;
    }
  }
  return draw;
}

struct ActorForward {
  Matrix x;    // transformed, D x B
  Matrix raw;  // pre-transform, D x B
  ForwardResult net;
};

inline ActorForward actor_forward_batch(const ParamActor& a, const Matrix& states) {
  if (states.rows() != a.state_dim) throw ShapeError("actor state dimension mismatch");
  ActorForward out;
  out.net = mlp_forward(a.spec, a.params, states);
  out.raw = out.net.output;
  out.x = transform_blocks(a.layout, out.raw);
  return out;
}

struct ActorOutput {
  Vector x_all;
  Vector raw;
};

inline ActorOutput actor_forward(const ParamActor& a, const Vector& state) {
  auto f = actor_forward_batch(a, Matrix(state));
  return {f.x.col(0), f.raw.col(0)};
}

struct Penalty {
  double value = 0.0;
  Vector grad;  // d penalty / d raw
};

// Sum over bounded coordinates of max(0, raw - high)^2 + max(0, low - raw)^2.
inline Penalty bounds_penalty(const Vector& raw, const ParamLayout& layout) {
  if (raw.size() != layout.total_dim()) throw ShapeError("bounds_penalty: raw dimension mismatch");
  Penalty p{0.0, Vector::Zero(raw.size())};
  for (const auto& b : layout.blocks) {
    if (b.kind != BlockKind::kBoundedBox) continue;
    for (int i = 0; i < b.dim; ++i) {
      const double r = raw[b.offset + i];
      const double over = std::max(0.0, r - b.high[i]);
      const double under = std::max(0.0, b.low[i] - r);
      p.value += over * over + under * under;
      p.grad[b.offset + i] = 2.0 * over - 2.0 * under;
    }
  }
  return p;
}

inline bool has_bounded_blocks(const ParamLayout& layout) {
  for (const auto& b : layout.blocks)
    if (b.kind == BlockKind::kBoundedBox) return true;
  return false;
}

inline Vector clamp_to_bounds(const ParamLayout& layout, Vector x) {
  for (const auto& b : layout.blocks) {
    if (b.kind != BlockKind::kBoundedBox) continue;
    x.segment(b.offset, b.dim) = x.segment(b.offset, b.dim).cwiseMax(b.low).cwiseMin(b.high);
  }
  return x;
}

struct LossGrad {
  double loss = 0.0;
  Gradients grads;
};

// One regression sample for the Q loss: executed head, the full parameter
// vector stored with it, and the target.
struct QSample {
  Vector state;
  HybridAction action;
  double target = 0.0;
};

// mean_b 1/2 (Q(s_b, k_b, x_b; w) - y_b)^2 and its gradient in w.
inline LossGrad q_loss_grad(const QNetwork& q, const std::vector<QSample>& batch) {
  if (batch.empty()) throw Error("q_loss_grad: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix states(q.state_dim, n), xs(q.param_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    if (!std::isfinite(s.target)) throw NonFiniteError("q_loss_grad: non-finite target");
    if (s.action.k < 0 || s.action.k >= q.num_heads) throw InvalidActionError("q_loss_grad: head out of range");
    states.col(i) = s.state;
    xs.col(i) = s.action.x_all;
  }
  const auto fwd = q_forward_batch(q, states, xs);
  Matrix dq = Matrix::Zero(q.num_heads, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    const double err = fwd.q(s.action.k, i) - s.target;
    loss += 0.5 * err * err;
    dq(s.action.k, i) = err * inv_n;
  }
  auto back = q_backward(q, fwd, dq);
  return {loss * inv_n, std::move(back.grads)};
}

struct ThetaLossOptions {
  double penalty_weight = 1.0;
  // Drop masked heads from the -sum_k Q_k term; requires one mask per state.
  bool exclude_masked = false;
};

// mean_s [ -sum_k Q(s, k, x(s; theta); w) + penalty_weight * bounds_penalty ]
// with w held fixed; gradient in theta.
inline LossGrad theta_loss_grad(const ParamActor& actor, const QNetwork& q, const std::vector<Vector>& states,
                                const ThetaLossOptions& opts = {}, const std::vector<ActionMask>* masks = nullptr) {
  if (states.empty()) throw Error("theta_loss_grad: empty batch");
  if (opts.exclude_masked && (masks == nullptr || masks->size() != states.size()))
    throw ShapeError("theta_loss_grad: masks required when excluding masked heads");
  const auto n = static_cast<Eigen::Index>(states.size());
  Matrix s(actor.state_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) s.col(i) = states[static_cast<std::size_t>(i)];
  const auto af = actor_forward_batch(actor, s);
  const auto qf = q_forward_batch(q, s, af.x);
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix dq = Matrix::Constant(q.num_heads, n, -inv_n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < q.num_heads; ++k) {
      if (opts.exclude_masked && !(*masks)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) {
        dq(k, i) = 0.0;
        continue;
      }
      loss -= qf.q(k, i);
    }
  }
  const auto qb = q_backward(q, qf, dq, /*want_param_grads=*/false);
  const Matrix dx = qb.input_grad.bottomRows(q.param_dim);
  Matrix draw = transform_blocks_backward(actor.layout, af.raw, af.x, dx);
  if (opts.penalty_weight != 0.0 && has_bounded_blocks(actor.layout)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto p = bounds_penalty(af.raw.col(i), actor.layout);
      loss += opts.penalty_weight * p.value;
      draw.col(i) += opts.penalty_weight * inv_n * p.grad;
    }
  }
  auto ab = mlp_backward(actor.spec, actor.params, af.net.cache, draw);
  return {loss * inv_n, std::move(ab.grads)};
}

// Index of the largest usable value; ties go to the lowest index.
inline int masked_argmax(const Vector& values, const ActionMask& mask) {
  if (mask.size() != static_cast<std::size_t>(values.size())) throw ShapeError("mask size mismatch");
  int best = -1;
  for (int k = 0; k < values.size(); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    if (best < 0 || values[k] > values[best]) best = k;
  }
  if (best < 0) throw InvalidActionError("every head is masked");
  return best;
}

inline double masked_max(const Vector& values, const ActionMask& mask) {
  return values[masked_argmax(values, mask)];
}

// argmax over usable heads of Q(s, k, x(s)) with bounded blocks of x(s)
// clamped into their boxes; the clamped vector is what gets executed.
inline HybridAction greedy_action(const QNetwork& q, const ParamActor& actor, const Vector& state,
                                  const ActionMask& mask) {
  if (usable_count(mask) == 0) throw InvalidActionError("greedy_action: every head is masked");
  Vector x = clamp_to_bounds(actor.layout, actor_forward(actor, state).x_all);
  const Vector values = q_forward(q, state, x);
  return {masked_argmax(values, mask), std::move(x)};
}

}  // namespace hybridrl
