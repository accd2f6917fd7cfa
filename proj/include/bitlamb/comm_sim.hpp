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

#ifndef BITLAMB_COMM_SIM_HPP_
#define BITLAMB_COMM_SIM_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitlamb/compression.hpp"
#include "bitlamb/dense_vector.hpp"

namespace bitlamb {

/// Exact accounting of bits communicated.
///
/// Convention: one collective moves each of the d elements 2*(n-1)/n times
/// per worker (reduce-scatter plus all-gather traffic); a worker's own chunk
/// is free. baseline_equivalent_bits charges the same traffic pattern at
/// baseline_bits_per_element, so reduction_factor() compares like with like.
/// Zero-padded chunk tails carry no charge; each 1-bit chunk message charges
/// 32 extra bits for its scale.
struct VolumeLedger {
  std::uint64_t gather_bits = 0;
  std::uint64_t scatter_bits = 0;
  std::uint64_t lossless_bits = 0;
  std::uint64_t baseline_equivalent_bits = 0;
  std::uint64_t compressed_collectives = 0;
  std::uint64_t lossless_collectives = 0;

  std::uint64_t total_sent_bits() const {
    return gather_bits + scatter_bits + lossless_bits;
  }
  /// baseline_equivalent / total_sent; 1.0 when nothing was sent.
  double reduction_factor() const;
};

/// Closed-form end-to-end communication-volume reduction for a two-stage run:
/// 1 / (warmup_ratio + (1 - warmup_ratio) * compressed_bits_per_element /
/// baseline_bits). warmup_ratio must lie in [0, 1].
double volume_reduction(double warmup_ratio, double baseline_bits,
                        double compressed_bits_per_element);

/// n simulated data-parallel workers with a deterministic step barrier and a
/// communication-volume ledger.
///
/// compressed_allreduce runs the 3-phase chunked collective: the fused input
/// is split into n chunks and worker i plays server for chunk i.
///   1) gather:  each worker error-compensated-compresses every chunk of its
///               input and sends chunk i to worker i;
///   2) average: each chunk server decompresses what it received, averages in
///               ascending worker order, and compresses the average with its
///               own error feedback;
///   3) scatter: each chunk server sends its compressed average to everyone;
///               all workers decompress and reassemble the same result.
class SimCluster {
 public:
  struct Config {
    int n_workers = 1;
    std::size_t dim = 0;  // fused element count every collective must match
    CompressorKind compressor = CompressorKind::kOneBit;
    int baseline_bits_per_element = 16;
    // When set, every error-compensated compression is checked against the
    // identity v + delta_prev == decompressed + delta_new.
    bool verify_compensation = false;
    double compensation_tolerance = 1e-12;
  };

  /// Residual diagnostics for one compressing endpoint (a worker's gather
  /// role or a chunk server), refreshed at every collective.
  struct EndpointStats {
    double delta_l2 = 0.0;
    double delta_linf = 0.0;
    double corrected_linf = 0.0;      // max |v + delta| seen this call
    double max_delta_linf = 0.0;      // running max over the run
    double max_corrected_linf = 0.0;  // running max over the run
  };

  explicit SimCluster(const Config& cfg);

  /// All workers contribute one vector of length dim; every worker receives
  /// the identical result. error_scale multiplies the carried residual before
  /// compression (1.0 reproduces the standard residual carry).
  DenseVector compressed_allreduce(std::span<const DenseVector> inputs,
                                   double error_scale = 1.0);

  /// Exact elementwise average, charged at baseline bits per element.
  DenseVector lossless_allreduce(std::span<const DenseVector> inputs);

  const VolumeLedger& ledger() const { return ledger_; }
  const Config& config() const { return cfg_; }
  int n_workers() const { return cfg_.n_workers; }
  std::size_t dim() const { return cfg_.dim; }
  std::size_t step_count() const { return step_count_; }
  std::uint64_t compensation_checks() const { return compensation_checks_; }

  std::span<const EndpointStats> worker_stats() const { return worker_stats_; }
  std::span<const EndpointStats> server_stats() const { return server_stats_; }
  /// Max over all endpoints, current call / whole run.
  double delta_linf() const;
  double delta_l2_max() const;
  double run_max_delta_linf() const;
  double run_max_corrected_linf() const;

  std::span<const double> worker_error(int i) const {
    return worker_error_[static_cast<std::size_t>(i)];
  }
  std::span<const double> server_error(int i) const {
    return server_error_[static_cast<std::size_t>(i)];
  }

 private:
  std::size_t chunk_begin(std::size_t j) const { return j * chunk_len_; }
  std::size_t chunk_real_elems(std::size_t j) const;
  std::uint64_t chunk_payload_bits(std::size_t j) const;
  void verify_chunk(std::span<const double> corrected,
                    const CompressedChunk& chunk,
                    std::span<const double> delta_new);
  void refresh_endpoint_stats();

  Config cfg_;
  std::size_t padded_ = 0;
  std::size_t chunk_len_ = 0;
  std::vector<DenseVector> worker_error_;  // n x padded, gather-phase residual
  std::vector<DenseVector> server_error_;  // n x chunk, per-chunk-server residual
  std::vector<DenseVector> worker_corrected_;  // scratch, n x padded
  std::vector<std::vector<CompressedChunk>> inbox_;  // [server][worker]
  std::vector<EndpointStats> worker_stats_;
  std::vector<EndpointStats> server_stats_;
  VolumeLedger ledger_;
  std::size_t step_count_ = 0;
  std::uint64_t compensation_checks_ = 0;
  std::string verify_failure_;
};

}  // namespace bitlamb

#endif  // BITLAMB_COMM_SIM_HPP_
