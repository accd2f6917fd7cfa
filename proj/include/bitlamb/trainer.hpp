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

#ifndef BITLAMB_TRAINER_HPP_
#define BITLAMB_TRAINER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bitlamb/config.hpp"

namespace bitlamb {

/// One row of the metrics CSV plus the extra diagnostics the per-layer trace
/// files need.
struct MetricsRecord {
  std::size_t step = 0;
  double loss = 0.0;
  std::vector<double> c;       // per layer
  std::vector<double> r;       // per layer
  std::vector<double> v_norm;  // per layer
  double delta_linf_max = 0.0;  // max over endpoints
  double delta_l2_max = 0.0;
  std::uint64_t cumulative_bits = 0;
  // Not part of the CSV:
  std::vector<double> v_ratio_preclip;          // per layer
  std::vector<double> endpoint_delta_l2;        // workers then servers
  std::vector<double> endpoint_delta_linf;
};

struct RunSummary {
  std::string task;
  std::string optimizer;
  std::string compressor;
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 0;
  double final_loss = 0.0;
  std::uint64_t total_bits_sent = 0;
  std::uint64_t baseline_equivalent_bits = 0;
  double reduction_factor = 1.0;
  double measured_bits_per_element = 0.0;  // compression stage, per moved element
  double closed_form_reduction = 1.0;      // volume_reduction at measured bits
  std::uint64_t compressed_collectives = 0;
  std::uint64_t lossless_collectives = 0;
  std::uint64_t compensation_checks = 0;
  double max_delta_linf = 0.0;
  double max_corrected_linf = 0.0;
  double wallclock_seconds = 0.0;
  std::string metrics_path;
};

struct RunResult {
  RunSummary summary;
  std::vector<MetricsRecord> records;
  std::vector<std::string> layer_names;
  int n_workers = 0;
  // Final per-endpoint residual statistics (workers then chunk servers).
  std::vector<SimCluster::EndpointStats> endpoint_stats;
};

/// Deterministic partition of the step's global batch: sample indices
/// [step*B, step*B + B) taken cyclically over the dataset and split into
/// n_workers disjoint, equally sized shards (B = n_workers * per_worker).
std::vector<std::vector<std::size_t>> shard_batch(std::size_t dataset_size,
                                                  std::size_t step,
                                                  int n_workers,
                                                  std::size_t per_worker);

/// Runs warmup_steps warmup steps followed by total - warmup compression
/// steps, logs one record per step, and writes the metrics CSV plus a
/// config sidecar when metrics_path is set. Deterministic given the config.
/// On divergence (non-finite loss) the partial trace is flushed before the
/// error propagates.
RunResult run_training(const RunConfig& cfg);

/// run_training plus per-layer coefficient/ratio trace files and a
/// per-endpoint residual trace under cfg.trace_dir.
RunResult trace_coefficients(const RunConfig& cfg);

std::string metrics_csv_header(std::span<const std::string> layer_names);
std::string metrics_csv_row(const MetricsRecord& record);
void write_metrics_csv(const std::string& path, const RunResult& result);

}  // namespace bitlamb

#endif  // BITLAMB_TRAINER_HPP_
