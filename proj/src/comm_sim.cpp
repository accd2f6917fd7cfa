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

#include "bitlamb/comm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bitlamb/errors.hpp"
#include "bitlamb/kernels.hpp"

namespace bitlamb {

double VolumeLedger::reduction_factor() const {
  const std::uint64_t sent = total_sent_bits();
  if (sent == 0) return 1.0;
  return static_cast<double>(baseline_equivalent_bits) /
         static_cast<double>(sent);
}

double volume_reduction(double warmup_ratio, double baseline_bits,
                        double compressed_bits_per_element) {
  check_arg(warmup_ratio >= 0.0 && warmup_ratio <= 1.0,
            "volume_reduction: warmup_ratio must be in [0, 1]");
  check_arg(baseline_bits > 0.0, "volume_reduction: baseline_bits must be > 0");
  check_arg(compressed_bits_per_element >= 0.0,
            "volume_reduction: compressed bits must be >= 0");
  const double denom =
      warmup_ratio +
      (1.0 - warmup_ratio) * compressed_bits_per_element / baseline_bits;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / denom;
}

SimCluster::SimCluster(const Config& cfg) : cfg_(cfg) {
  check_arg(cfg.n_workers >= 1, "SimCluster: need at least one worker");
  check_arg(cfg.dim >= 1, "SimCluster: dim must be >= 1");
  check_arg(cfg.baseline_bits_per_element >= 1,
            "SimCluster: baseline bits must be >= 1");
  const std::size_t n = static_cast<std::size_t>(cfg.n_workers);
  // Zero-pad to the next multiple of n so worker i can serve chunk i
  // uniformly. Padded elements carry no ledger charge.
  padded_ = (cfg.dim + n - 1) / n * n;
  chunk_len_ = padded_ / n;
  worker_error_.assign(n, DenseVector(padded_));
  server_error_.assign(n, DenseVector(chunk_len_));
  worker_corrected_.assign(n, DenseVector(padded_));
  inbox_.assign(n, std::vector<CompressedChunk>(n));
  worker_stats_.assign(n, EndpointStats{});
  server_stats_.assign(n, EndpointStats{});
}

std::size_t SimCluster::chunk_real_elems(std::size_t j) const {
  const std::size_t begin = chunk_begin(j);
  if (begin >= cfg_.dim) return 0;
  return std::min(chunk_len_, cfg_.dim - begin);
}

std::uint64_t SimCluster::chunk_payload_bits(std::size_t j) const {
  const std::uint64_t real = chunk_real_elems(j);
  if (real == 0) return 0;  // wholly padded chunk, never sent
  if (cfg_.compressor == CompressorKind::kOneBit) return real + 32;
  return real * static_cast<std::uint64_t>(cfg_.baseline_bits_per_element);
}

// Runs inside parallel regions, so failures are recorded rather than thrown;
// the caller raises after the region joins.
void SimCluster::verify_chunk(std::span<const double> corrected,
                              const CompressedChunk& chunk,
                              std::span<const double> delta_new) {
  DenseVector decompressed = chunk.decompress();
  for (std::size_t k = 0; k < corrected.size(); ++k) {
    const double lhs = corrected[k];
    const double rhs = decompressed[k] + delta_new[k];
    const double denom =
        std::max({std::abs(lhs), std::abs(decompressed[k]), 1e-300});
    if (std::abs(lhs - rhs) > cfg_.compensation_tolerance * denom) {
      std::ostringstream msg;
      msg << "error-compensation identity violated at element " << k << ": |"
          << lhs << " - " << rhs << "| exceeds relative tolerance "
          << cfg_.compensation_tolerance;
#if defined(_OPENMP)
#pragma omp critical(bitlamb_verify_failure)
#endif
      {
        if (verify_failure_.empty()) verify_failure_ = msg.str();
      }
      return;
    }
  }
}

void SimCluster::refresh_endpoint_stats() {
  const std::size_t n = static_cast<std::size_t>(cfg_.n_workers);
  for (std::size_t i = 0; i < n; ++i) {
    EndpointStats& ws = worker_stats_[i];
    ws.delta_l2 = std::sqrt(kernels::sum_squares(worker_error_[i]));
    ws.delta_linf = kernels::max_abs(worker_error_[i]);
    ws.corrected_linf = kernels::max_abs(worker_corrected_[i]);
    ws.max_delta_linf = std::max(ws.max_delta_linf, ws.delta_linf);
    ws.max_corrected_linf = std::max(ws.max_corrected_linf, ws.corrected_linf);
  }
}

DenseVector SimCluster::compressed_allreduce(
    std::span<const DenseVector> inputs, double error_scale) {
  const std::size_t n = static_cast<std::size_t>(cfg_.n_workers);
  check_same_size(inputs.size(), n, "compressed_allreduce: worker count");
  for (const DenseVector& v : inputs) {
    check_same_size(v.size(), cfg_.dim, "compressed_allreduce: input length");
  }

  // Phase 1 (gather): every worker compresses each chunk of its corrected
  // stream and posts chunk j to chunk server j.
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t iw = 0; iw < static_cast<std::int64_t>(n); ++iw) {
    const std::size_t i = static_cast<std::size_t>(iw);
    // Padded local view of the input; the tail is zero.
    DenseVector padded_input(padded_);
    kernels::copy(padded_input.span().first(cfg_.dim), inputs[i]);
    for (std::size_t j = 0; j < n; ++j) {
      auto v = padded_input.span().subspan(chunk_begin(j), chunk_len_);
      auto delta = worker_error_[i].span().subspan(chunk_begin(j), chunk_len_);
      auto corrected =
          worker_corrected_[i].span().subspan(chunk_begin(j), chunk_len_);
      inbox_[j][i] = compress_with_feedback(v, delta, cfg_.compressor,
                                            error_scale, corrected);
      if (cfg_.verify_compensation && error_scale == 1.0) {
        verify_chunk(corrected, inbox_[j][i], delta);
      }
    }
  }

  // Phases 2 + 3 (average, scatter): chunk server j averages the n chunks it
  // received in ascending worker order, compresses the average with its own
  // error feedback, and broadcasts; everybody reassembles the same vector.
  DenseVector result(padded_);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t jw = 0; jw < static_cast<std::int64_t>(n); ++jw) {
    const std::size_t j = static_cast<std::size_t>(jw);
    DenseVector average(chunk_len_);
    for (std::size_t i = 0; i < n; ++i) {
      inbox_[j][i].decompress_accumulate(average);
    }
    kernels::scale(average, 1.0 / static_cast<double>(n));

    DenseVector corrected(chunk_len_);
    CompressedChunk out =
        compress_with_feedback(average.span(), server_error_[j].span(),
                               cfg_.compressor, error_scale, corrected);
    if (cfg_.verify_compensation && error_scale == 1.0) {
      verify_chunk(corrected, out, server_error_[j]);
    }
    out.decompress_into(result.span().subspan(chunk_begin(j), chunk_len_));

    EndpointStats& ss = server_stats_[j];
    ss.delta_l2 = std::sqrt(kernels::sum_squares(server_error_[j]));
    ss.delta_linf = kernels::max_abs(server_error_[j]);
    ss.corrected_linf = kernels::max_abs(corrected);
    ss.max_delta_linf = std::max(ss.max_delta_linf, ss.delta_linf);
    ss.max_corrected_linf = std::max(ss.max_corrected_linf, ss.corrected_linf);
  }

  if (!verify_failure_.empty()) {
    throw std::logic_error(verify_failure_);
  }

  refresh_endpoint_stats();

  std::uint64_t chunk_bits_total = 0;
  for (std::size_t j = 0; j < n; ++j) chunk_bits_total += chunk_payload_bits(j);
  ledger_.gather_bits += (n - 1) * chunk_bits_total;
  ledger_.scatter_bits += (n - 1) * chunk_bits_total;
  ledger_.baseline_equivalent_bits +=
      2 * (n - 1) * static_cast<std::uint64_t>(cfg_.dim) *
      static_cast<std::uint64_t>(cfg_.baseline_bits_per_element);
  ledger_.compressed_collectives += 1;
  step_count_ += 1;
  if (cfg_.verify_compensation && error_scale == 1.0) {
    compensation_checks_ += n * n + n;
  }

  return DenseVector(result.span().first(cfg_.dim));
}

DenseVector SimCluster::lossless_allreduce(std::span<const DenseVector> inputs) {
  const std::size_t n = static_cast<std::size_t>(cfg_.n_workers);
  check_same_size(inputs.size(), n, "lossless_allreduce: worker count");
  for (const DenseVector& v : inputs) {
    check_same_size(v.size(), cfg_.dim, "lossless_allreduce: input length");
  }

  DenseVector result(cfg_.dim);
  const double inv_n = 1.0 / static_cast<double>(n);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (cfg_.dim >= 2048)
#endif
  for (std::int64_t kw = 0; kw < static_cast<std::int64_t>(cfg_.dim); ++kw) {
    const std::size_t k = static_cast<std::size_t>(kw);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += inputs[i][k];
    result[k] = acc * inv_n;
  }

  const std::uint64_t bits = 2 * (n - 1) *
                             static_cast<std::uint64_t>(cfg_.dim) *
                             static_cast<std::uint64_t>(cfg_.baseline_bits_per_element);
  ledger_.lossless_bits += bits;
  ledger_.baseline_equivalent_bits += bits;
  ledger_.lossless_collectives += 1;
  step_count_ += 1;
  return result;
}

double SimCluster::delta_linf() const {
  double m = 0.0;
  for (const auto& s : worker_stats_) m = std::max(m, s.delta_linf);
  for (const auto& s : server_stats_) m = std::max(m, s.delta_linf);
  return m;
}

double SimCluster::delta_l2_max() const {
  double m = 0.0;
  for (const auto& s : worker_stats_) m = std::max(m, s.delta_l2);
  for (const auto& s : server_stats_) m = std::max(m, s.delta_l2);
  return m;
}

double SimCluster::run_max_delta_linf() const {
  double m = 0.0;
  for (const auto& s : worker_stats_) m = std::max(m, s.max_delta_linf);
  for (const auto& s : server_stats_) m = std::max(m, s.max_delta_linf);
  return m;
}

double SimCluster::run_max_corrected_linf() const {
  double m = 0.0;
  for (const auto& s : worker_stats_) m = std::max(m, s.max_corrected_linf);
  for (const auto& s : server_stats_) m = std::max(m, s.max_corrected_linf);
  return m;
}

}  // namespace bitlamb
