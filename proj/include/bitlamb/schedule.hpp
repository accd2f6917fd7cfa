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

#ifndef BITLAMB_SCHEDULE_HPP_
#define BITLAMB_SCHEDULE_HPP_

#include <cstddef>
#include <optional>
#include <string>

namespace bitlamb {

enum class ScheduleKind {
  kConstant,
  kLinear,   // linear warmup to the peak, then linear decay to lr_final
  kExpStep,  // exponential warmup to the peak, then step decay
};

const char* to_string(ScheduleKind kind);
std::optional<ScheduleKind> parse_schedule_kind(const std::string& name);

/// Learning-rate schedule as a pure function of the step index.
struct Schedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double peak = 1e-2;            // gamma, the reference learning rate
  double initial = 1e-3;         // starting rate for warmup ramps
  double final_value = 0.0;      // linear-decay end value
  std::size_t warmup_steps = 0;  // ramp length (0 = start at peak)
  std::size_t total_steps = 1;
  double decay_factor = 0.9;       // exp-step: multiplier per interval
  std::size_t decay_interval = 250;  // exp-step: steps between decays

  double at(std::size_t t) const;
  void validate() const;  // throws ConfigError
};

}  // namespace bitlamb

#endif  // BITLAMB_SCHEDULE_HPP_
