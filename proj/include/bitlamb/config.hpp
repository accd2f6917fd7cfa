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

#ifndef BITLAMB_CONFIG_HPP_
#define BITLAMB_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "bitlamb/compression.hpp"
#include "bitlamb/optimizers.hpp"
#include "bitlamb/schedule.hpp"
#include "bitlamb/tasks.hpp"

namespace bitlamb {

/// Everything a training run needs, loadable from a flat key = value file
/// (one pair per line, '#' comments, unknown keys are errors).
struct RunConfig {
  std::string task = "quadratic";
  int n_workers = 4;
  std::size_t batch_per_worker = 8;
  OptimizerVariant optimizer = OptimizerVariant::kOneBitLamb;
  CompressorKind compressor = CompressorKind::kOneBit;
  std::uint64_t seed = 1;
  HyperParams hyper;           // total_steps/warmup_steps live here
  Schedule schedule;           // peak rate, ramp and decay parameters
  int baseline_bits = 16;
  bool verify_compensation = false;
  TaskOptions task_options;
  std::string metrics_path;    // empty = no per-step CSV
  std::string trace_dir;       // empty = no per-layer trace files

  void validate() const;  // throws ConfigError

  /// Round-trippable text form (the same flat key = value format).
  std::string serialize() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace bitlamb

#endif  // BITLAMB_CONFIG_HPP_
