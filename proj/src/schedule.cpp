// Copyright 2026 The bitlamb Authors. All Rights Reserved.
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
// =============================================================================

#include "bitlamb/schedule.hpp"

#include <cmath>

#include "bitlamb/errors.hpp"

namespace bitlamb {

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant:
      return "constant";
    case ScheduleKind::kLinear:
      return "linear";
    case ScheduleKind::kExpStep:
      return "exp_step";
  }
  return "unknown";
}

std::optional<ScheduleKind> parse_schedule_kind(const std::string& name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "exp_step") return ScheduleKind::kExpStep;
  return std::nullopt;
}

void Schedule::validate() const {
  if (!(peak > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(initial > 0.0)) throw ConfigError("lr_initial must be > 0");
  if (final_value < 0.0) throw ConfigError("lr_final must be >= 0");
  if (kind == ScheduleKind::kExpStep) {
    if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
      throw ConfigError("lr_decay_factor must be in (0, 1]");
    }
    if (decay_interval == 0) throw ConfigError("lr_decay_interval must be > 0");
  }
  if (total_steps == 0) throw ConfigError("total_steps must be > 0");
}

double Schedule::at(std::size_t t) const {
  switch (kind) {
    case ScheduleKind::kConstant:
      return peak;
    case ScheduleKind::kLinear: {
      if (warmup_steps > 0 && t < warmup_steps) {
        return peak * static_cast<double>(t + 1) /
               static_cast<double>(warmup_steps);
      }
      if (total_steps <= warmup_steps + 1) return peak;
      const double progress = static_cast<double>(t - warmup_steps) /
                              static_cast<double>(total_steps - warmup_steps - 1);
      return peak + (final_value - peak) * std::min(progress, 1.0);
    }
    case ScheduleKind::kExpStep: {
      if (warmup_steps > 0 && t < warmup_steps) {
        const double frac = static_cast<double>(t + 1) /
                            static_cast<double>(warmup_steps);
        return initial * std::pow(peak / initial, frac);
      }
      const std::size_t intervals = (t - warmup_steps) / decay_interval;
      return peak * std::pow(decay_factor, static_cast<double>(intervals));
    }
  }
  return peak;
}

}  // namespace bitlamb
