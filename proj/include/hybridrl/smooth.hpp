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

#include <cstddef>
#include <vector>

#include "hybridrl/error.hpp"

namespace hybridrl {

// Trailing running average: out[i] is the mean of series[max(0, i-w+1) .. i],
// so the first w-1 entries average whatever prefix exists.
inline std::vector<double> smooth(const std::vector<double>& series, std::size_t window) {
  if (window < 1) throw ConfigError("smooth: window must be >= 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= window) sum -= series[i - window];
    const std::size_t n = i + 1 < window ? i + 1 : window;
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

}  // namespace hybridrl
