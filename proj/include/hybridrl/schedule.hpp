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
#include <string>

#include "hybridrl/error.hpp"

namespace hybridrl {

// Step-indexed scalar: a constant, or a linear ramp from `start` to `end`
// over `horizon` steps that holds `end` afterwards.
struct Schedule {
  enum class Kind { kConstant, kLinear };

  Kind kind = Kind::kConstant;
  double start = 0.0;
  double end = 0.0;
  std::int64_t horizon = 1;

  static Schedule constant(double v) { return {Kind::kConstant, v, v, 1}; }
  static Schedule linear(double start, double end, std::int64_t horizon) {
    Schedule s{Kind::kLinear, start, end, horizon};
    s.validate();
    return s;
  }

  void validate() const {
    if (start < 0.0 || end < 0.0) throw ConfigError("schedule values must be >= 0");
    if (kind == Kind::kLinear && horizon <= 0) throw ConfigError("linear schedule horizon must be > 0");
  }

  Schedule scaled(double factor) const { return {kind, start * factor, end * factor, horizon}; }
};

inline double schedule_value(const Schedule& s, std::int64_t t) {
  if (s.kind == Schedule::Kind::kConstant) return s.start;
  if (t <= 0) return s.start;
  if (t >= s.horizon) return s.end;
  const double frac = static_cast<double>(t) / static_cast<double>(s.horizon);
  return s.start + (s.end - s.start) * frac;
}

}  // namespace hybridrl
