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
#include <concepts>
#include <string>

#include "hybridrl/error.hpp"
#include "hybridrl/mlp.hpp"

namespace hybridrl {

// Central-difference gradient of a scalar function of the parameters:
// (f(w + eps e_i) - f(w - eps e_i)) / (2 eps) for every coordinate i.
template <class F>
  requires std::invocable<F&, const MLPParams&>
Gradients finite_diff_grad(F&& loss_fn, const MLPParams& params, double eps = 1e-6) {
  if (!(eps > 0.0)) throw Error("finite_diff_grad: eps must be > 0");
  MLPParams work = params;
  Gradients out = Gradients::zeros_like(params);
  const std::size_t n = params.coordinate_count();
  for (std::size_t i = 0; i < n; ++i) {
    double& w = work.coordinate(i);
    const double w0 = w;
    w = w0 + eps;
    const double up = loss_fn(static_cast<const MLPParams&>(work));
    w = w0 - eps;
    const double down = loss_fn(static_cast<const MLPParams&>(work));
    w = w0;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NonFiniteError("finite_diff_grad: loss is not finite at coordinate " + std::to_string(i));
    out.coordinate(i) = (up - down) / (2.0 * eps);
  }
  return out;
}

}  // namespace hybridrl
