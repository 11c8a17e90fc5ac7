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

#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"

namespace hybridrl {

inline void sgd_step(MLPParams& params, const Gradients& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw NonFiniteError("sgd_step: learning rate must be finite and >= 0");
  if (!params.same_shape(grads)) throw ShapeError("sgd_step: gradient shape mismatch");
  if (!params.all_finite() || !grads.all_finite()) throw NonFiniteError("sgd_step: non-finite params or grads");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    params.layers[i].weight -= lr * grads.layers[i].weight;
    params.layers[i].bias -= lr * grads.layers[i].bias;
  }
}

struct RMSPropConfig {
  double decay = 0.99;      // rho
  double epsilon = 1e-8;    // damping inside the square root
};

// Squared-gradient accumulator, one entry per parameter.
struct RMSPropState {
  Gradients mean_square;
  RMSPropConfig config;

  static RMSPropState for_params(const MLPParams& params, RMSPropConfig config = {}) {
    if (!(config.decay > 0.0 && config.decay < 1.0)) throw Error("RMSProp decay must be in (0,1)");
    if (!(config.epsilon > 0.0)) throw Error("RMSProp epsilon must be > 0");
    return {Gradients::zeros_like(params), config};
  }
};

// v <- rho v + (1 - rho) g^2;  w <- w - lr g / sqrt(v + eps)
inline void rmsprop_step(MLPParams& params, const Gradients& grads, RMSPropState& state, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw NonFiniteError("rmsprop_step: learning rate must be finite and >= 0");
  if (!params.same_shape(grads) || !params.same_shape(state.mean_square))
    throw ShapeError("rmsprop_step: shape mismatch");
  if (!grads.all_finite()) throw NonFiniteError("rmsprop_step: non-finite gradient");
  const double rho = state.config.decay;
  const double eps = state.config.epsilon;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& v = state.mean_square.layers[i];
    const auto& g = grads.layers[i];
    auto& p = params.layers[i];
    v.weight.array() = rho * v.weight.array() + (1.0 - rho) * g.weight.array().square();
    v.bias.array() = rho * v.bias.array() + (1.0 - rho) * g.bias.array().square();
    p.weight.array() -= lr * g.weight.array() / (v.weight.array() + eps).sqrt();
    p.bias.array() -= lr * g.bias.array() / (v.bias.array() + eps).sqrt();
  }
}

}  // namespace hybridrl
