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

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bitlamb/comm_sim.hpp"
#include "bitlamb/config.hpp"
#include "bitlamb/trainer.hpp"

namespace {

void print_summary(const bitlamb::RunSummary& s) {
  std::printf("task:                   %s\n", s.task.c_str());
  std::printf("optimizer:              %s (%s compressor)\n",
              s.optimizer.c_str(), s.compressor.c_str());
  std::printf("steps:                  %zu (warmup %zu)\n", s.total_steps,
              s.warmup_steps);
  std::printf("final loss:             %.10g\n", s.final_loss);
  std::printf("bits sent:              %llu\n",
              static_cast<unsigned long long>(s.total_bits_sent));
  std::printf("baseline-equivalent:    %llu\n",
              static_cast<unsigned long long>(s.baseline_equivalent_bits));
  std::printf("volume reduction:       %.4g\n", s.reduction_factor);
  std::printf("bits/element (meas.):   %.4g\n", s.measured_bits_per_element);
  std::printf("closed-form reduction:  %.4g\n", s.closed_form_reduction);
  std::printf("collectives:            %llu compressed, %llu lossless\n",
              static_cast<unsigned long long>(s.compressed_collectives),
              static_cast<unsigned long long>(s.lossless_collectives));
  std::printf("wallclock:              %.3f s\n", s.wallclock_seconds);
  if (!s.metrics_path.empty()) {
    std::printf("metrics:                %s\n", s.metrics_path.c_str());
  }
}

int run_train(const std::string& config_path) {
  const bitlamb::RunConfig cfg = bitlamb::load_run_config(config_path);
  const bitlamb::RunResult result = bitlamb::run_training(cfg);
  print_summary(result.summary);
  return 0;
}

int run_compare(const std::vector<std::string>& config_paths) {
  std::vector<bitlamb::RunSummary> summaries;
  for (const std::string& path : config_paths) {
    const bitlamb::RunConfig cfg = bitlamb::load_run_config(path);
    summaries.push_back(bitlamb::run_training(cfg).summary);
  }
  std::printf("%-18s %-10s %-14s %-16s %-10s %-9s\n", "optimizer", "task",
              "final_loss", "bits_sent", "reduction", "time_s");
  for (const auto& s : summaries) {
    std::printf("%-18s %-10s %-14.6g %-16llu %-10.4g %-9.3f\n",
                s.optimizer.c_str(), s.task.c_str(), s.final_loss,
                static_cast<unsigned long long>(s.total_bits_sent),
                s.reduction_factor, s.wallclock_seconds);
  }
  return 0;
}

int run_trace(const std::string& config_path) {
  const bitlamb::RunConfig cfg = bitlamb::load_run_config(config_path);
  const bitlamb::RunResult result = bitlamb::trace_coefficients(cfg);
  print_summary(result.summary);
  std::printf("traces:                 %s\n", cfg.trace_dir.c_str());
  return 0;
}

int run_volume(double warmup_ratio, double baseline_bits,
               double compressed_bits) {
  const double factor =
      bitlamb::volume_reduction(warmup_ratio, baseline_bits, compressed_bits);
  std::printf("%.2f\n", factor);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-bit LAMB training simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "run one training configuration");
  train->add_option("--config", config_path, "config file")->required();

  std::vector<std::string> compare_paths;
  auto* compare =
      app.add_subcommand("compare", "run several configs, print a summary table");
  compare->add_option("--configs", compare_paths, "config files")
      ->required()
      ->expected(1, -1);

  std::string trace_config;
  auto* trace = app.add_subcommand(
      "trace-coefficients",
      "run training and write per-layer coefficient/ratio traces");
  trace->add_option("--config", trace_config, "config file")->required();

  double warmup_ratio = 0.0;
  double baseline_bits = 16.0;
  double compressed_bits = 1.0;
  auto* volume = app.add_subcommand(
      "volume", "closed-form communication-volume reduction calculator");
  volume->add_option("--warmup-ratio", warmup_ratio, "warmup fraction of steps")
      ->required();
  volume->add_option("--baseline-bits", baseline_bits,
                     "uncompressed bits per element");
  volume->add_option("--compressed-bits", compressed_bits,
                     "compressed bits per element");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(config_path);
    if (compare->parsed()) return run_compare(compare_paths);
    if (trace->parsed()) return run_trace(trace_config);
    if (volume->parsed())
      return run_volume(warmup_ratio, baseline_bits, compressed_bits);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
