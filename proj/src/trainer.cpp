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

#include "bitlamb/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bitlamb/errors.hpp"

namespace bitlamb {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

}  // namespace

std::vector<std::vector<std::size_t>> shard_batch(std::size_t dataset_size,
                                                  std::size_t step,
                                                  int n_workers,
                                                  std::size_t per_worker) {
  check_arg(n_workers >= 1, "shard_batch: n_workers must be >= 1");
  check_arg(per_worker >= 1, "shard_batch: per_worker must be >= 1");
  const std::size_t n = static_cast<std::size_t>(n_workers);
  const std::size_t global = n * per_worker;
  check_arg(dataset_size >= global,
            "shard_batch: dataset smaller than one global batch");
  const std::size_t start = (step * global) % dataset_size;
  std::vector<std::vector<std::size_t>> shards(n);
  for (std::size_t i = 0; i < n; ++i) {
    shards[i].reserve(per_worker);
    for (std::size_t k = 0; k < per_worker; ++k) {
      shards[i].push_back((start + i * per_worker + k) % dataset_size);
    }
  }
  return shards;
}

std::string metrics_csv_header(std::span<const std::string> layer_names) {
  std::ostringstream out;
  out << "step,loss";
  for (const auto& name : layer_names) out << ",c_t." << name;
  for (const auto& name : layer_names) out << ",r_t." << name;
  for (const auto& name : layer_names) out << ",v_norm." << name;
  out << ",delta_linf_max,delta_l2_max,cumulative_bits\n";
  return out.str();
}

std::string metrics_csv_row(const MetricsRecord& record) {
  std::ostringstream out;
  out << record.step << ',' << fmt17(record.loss);
  for (double c : record.c) out << ',' << fmt17(c);
  for (double r : record.r) out << ',' << fmt17(r);
  for (double v : record.v_norm) out << ',' << fmt17(v);
  out << ',' << fmt17(record.delta_linf_max) << ','
      << fmt17(record.delta_l2_max) << ',' << record.cumulative_bits << '\n';
  return out.str();
}

void write_metrics_csv(const std::string& path, const RunResult& result) {
  std::ostringstream out;
  out << metrics_csv_header(result.layer_names);
  for (const MetricsRecord& record : result.records) {
    out << metrics_csv_row(record);
  }
  write_text_file(path, out.str());
}

namespace {

void write_trace_files(const std::string& dir, const RunResult& result) {
  for (std::size_t l = 0; l < result.layer_names.size(); ++l) {
    std::ostringstream out;
    out << "step,c_t,r_t,v_norm,v_ratio_preclip\n";
    for (const MetricsRecord& rec : result.records) {
      out << rec.step << ',' << fmt17(rec.c[l]) << ',' << fmt17(rec.r[l])
          << ',' << fmt17(rec.v_norm[l]) << ','
          << fmt17(rec.v_ratio_preclip[l]) << '\n';
    }
    write_text_file(dir + "/trace_" + result.layer_names[l] + ".csv",
                    out.str());
  }

  // Residual norms per endpoint: n worker columns then n server columns.
  std::ostringstream out;
  out << "step";
  for (int i = 0; i < result.n_workers; ++i) out << ",delta_l2.w" << i;
  for (int i = 0; i < result.n_workers; ++i) out << ",delta_l2.s" << i;
  for (int i = 0; i < result.n_workers; ++i) out << ",delta_linf.w" << i;
  for (int i = 0; i < result.n_workers; ++i) out << ",delta_linf.s" << i;
  out << '\n';
  for (const MetricsRecord& rec : result.records) {
    out << rec.step;
    for (double v : rec.endpoint_delta_l2) out << ',' << fmt17(v);
    for (double v : rec.endpoint_delta_linf) out << ',' << fmt17(v);
    out << '\n';
  }
  write_text_file(dir + "/trace_delta.csv", out.str());
}

RunResult run_impl(const RunConfig& cfg, bool write_traces) {
  cfg.validate();
  const auto start_time = std::chrono::steady_clock::now();

  std::unique_ptr<Task> task = make_task(cfg.task, cfg.seed, cfg.task_options);

  // Registration gate: the analytic gradient must agree with central finite
  // differences before any training happens.
  {
    std::vector<std::size_t> probe_batch(
        std::min<std::size_t>(16, task->dataset_size()));
    std::iota(probe_batch.begin(), probe_batch.end(), 0);
    const double dev = gradient_check(*task, task->initial_params(cfg.seed),
                                      probe_batch, cfg.seed, 20);
    if (dev > 1e-5) {
      throw std::logic_error(
          "task '" + cfg.task +
          "' failed finite-difference gradient validation (deviation " +
          std::to_string(dev) + ")");
    }
  }

  std::vector<Optimizer::LayerSpec> specs;
  for (const LayerShape& shape : task->layers()) {
    specs.push_back({shape.name, shape.size});
  }
  Optimizer optimizer(cfg.optimizer, specs, cfg.hyper);

  std::vector<DenseVector> init = task->initial_params(cfg.seed);
  for (std::size_t l = 0; l < init.size(); ++l) {
    optimizer.mutable_layers()[l].x = std::move(init[l]);
  }

  SimCluster::Config cluster_cfg;
  cluster_cfg.n_workers = cfg.n_workers;
  cluster_cfg.dim = optimizer.fused_dim();
  cluster_cfg.compressor = cfg.compressor;
  cluster_cfg.baseline_bits_per_element = cfg.baseline_bits;
  cluster_cfg.verify_compensation = cfg.verify_compensation;
  SimCluster cluster(cluster_cfg);

  Schedule schedule = cfg.schedule;
  schedule.total_steps = cfg.hyper.total_steps;

  const std::size_t n = static_cast<std::size_t>(cfg.n_workers);
  const std::size_t layer_count = task->layers().size();
  std::vector<std::vector<DenseVector>> local_grads(n);
  for (auto& per_layer : local_grads) {
    for (const LayerShape& shape : task->layers()) {
      per_layer.emplace_back(shape.size);
    }
  }

  RunResult result;
  result.n_workers = cfg.n_workers;
  for (const LayerShape& shape : task->layers()) {
    result.layer_names.push_back(shape.name);
  }
  result.records.reserve(cfg.hyper.total_steps);

  auto flush_outputs = [&]() {
    if (!cfg.metrics_path.empty()) {
      write_metrics_csv(cfg.metrics_path, result);
      write_text_file(cfg.metrics_path + ".config", cfg.serialize());
      result.summary.metrics_path = cfg.metrics_path;
    }
    if (write_traces && !cfg.trace_dir.empty()) {
      write_trace_files(cfg.trace_dir, result);
    }
  };

  ParamsView params_view;
  for (const LayerState& layer : optimizer.layers()) {
    params_view.push_back(layer.x.span());
  }

  double loss = 0.0;
  try {
    for (std::size_t t = 0; t < cfg.hyper.total_steps; ++t) {
      task->at_step(t);
      const auto shards =
          shard_batch(task->dataset_size(), t, cfg.n_workers,
                      cfg.batch_per_worker);

      // Worker-local gradients; each worker touches only its own sink.
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
      for (std::int64_t iw = 0; iw < static_cast<std::int64_t>(n); ++iw) {
        const std::size_t i = static_cast<std::size_t>(iw);
        GradSink sink;
        sink.reserve(layer_count);
        for (auto& g : local_grads[i]) sink.push_back(g.span());
        task->gradient(params_view, shards[i], sink);
      }

      StepTrace trace = optimizer.step(local_grads, t, schedule.at(t), cluster);

      loss = task->full_loss(params_view);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at step " << t;
        throw std::runtime_error(msg.str());
      }

      // Structural residual bound of the sign compressor; a violation means
      // the error feedback is broken, not that the run went badly. The bound
      // is a theorem only for the standard residual carry.
      if (!cfg.hyper.scaled_error_feedback &&
          cluster.run_max_delta_linf() >
              2.0 * cluster.run_max_corrected_linf() + 1e-300) {
        throw std::logic_error("residual bound violated: ||delta||_inf grew "
                               "past 2 * max ||corrected||_inf");
      }

      MetricsRecord rec;
      rec.step = t;
      rec.loss = loss;
      rec.c = std::move(trace.c);
      rec.r = std::move(trace.r);
      rec.v_norm = std::move(trace.v_norm);
      rec.v_ratio_preclip = std::move(trace.v_ratio_preclip);
      rec.delta_linf_max = cluster.delta_linf();
      rec.delta_l2_max = cluster.delta_l2_max();
      rec.cumulative_bits = cluster.ledger().total_sent_bits();
      for (const auto& s : cluster.worker_stats()) {
        rec.endpoint_delta_l2.push_back(s.delta_l2);
        rec.endpoint_delta_linf.push_back(s.delta_linf);
      }
      for (const auto& s : cluster.server_stats()) {
        rec.endpoint_delta_l2.push_back(s.delta_l2);
        rec.endpoint_delta_linf.push_back(s.delta_linf);
      }
      result.records.push_back(std::move(rec));
    }
  } catch (...) {
    // Abort with the last good trace on disk; the original error wins over
    // any failure while flushing.
    try {
      flush_outputs();
    } catch (...) {
    }
    throw;
  }

  for (const auto& s : cluster.worker_stats()) result.endpoint_stats.push_back(s);
  for (const auto& s : cluster.server_stats()) result.endpoint_stats.push_back(s);

  const VolumeLedger& ledger = cluster.ledger();
  RunSummary& summary = result.summary;
  summary.task = cfg.task;
  summary.optimizer = to_string(cfg.optimizer);
  summary.compressor = to_string(cfg.compressor);
  summary.total_steps = cfg.hyper.total_steps;
  summary.warmup_steps = cfg.hyper.warmup_steps;
  summary.final_loss = loss;
  summary.total_bits_sent = ledger.total_sent_bits();
  summary.baseline_equivalent_bits = ledger.baseline_equivalent_bits;
  summary.reduction_factor = ledger.reduction_factor();
  summary.compressed_collectives = ledger.compressed_collectives;
  summary.lossless_collectives = ledger.lossless_collectives;
  summary.compensation_checks = cluster.compensation_checks();
  summary.max_delta_linf = cluster.run_max_delta_linf();
  summary.max_corrected_linf = cluster.run_max_corrected_linf();

  const std::uint64_t element_transfers =
      ledger.compressed_collectives * 2 *
      static_cast<std::uint64_t>(cfg.n_workers - 1) * optimizer.fused_dim();
  if (element_transfers > 0) {
    summary.measured_bits_per_element =
        static_cast<double>(ledger.gather_bits + ledger.scatter_bits) /
        static_cast<double>(element_transfers);
  }
  if (ledger.baseline_equivalent_bits == 0) {
    summary.closed_form_reduction = 1.0;
  } else {
    const std::uint64_t collectives =
        ledger.compressed_collectives + ledger.lossless_collectives;
    const double warmup_ratio =
        static_cast<double>(ledger.lossless_collectives) /
        static_cast<double>(collectives);
    summary.closed_form_reduction = volume_reduction(
        warmup_ratio, static_cast<double>(cfg.baseline_bits),
        summary.measured_bits_per_element);
  }

  flush_outputs();
  summary.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return result;
}

}  // namespace

RunResult run_training(const RunConfig& cfg) {
  return run_impl(cfg, /*write_traces=*/!cfg.trace_dir.empty());
}

RunResult trace_coefficients(const RunConfig& cfg) {
  if (cfg.trace_dir.empty()) {
    throw ConfigError("trace-coefficients needs trace_dir in the config");
  }
  return run_impl(cfg, /*write_traces=*/true);
}

}  // namespace bitlamb
