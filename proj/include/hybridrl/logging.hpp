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

#include <cstdlib>
#include <string>

#include <spdlog/spdlog.h>

namespace hybridrl {

// Log level from PDQN_LOG_LEVEL (error, info or debug); info when unset.
inline void init_logging() {
  const char* v = std::getenv("PDQN_LOG_LEVEL");
  const std::string level = v ? v : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::set_level(spdlog::level::info);
  if (v && level != "error" && level != "info" && level != "debug")
    spdlog::warn("PDQN_LOG_LEVEL='{}' not recognized, using info", level);
}

}  // namespace hybridrl
