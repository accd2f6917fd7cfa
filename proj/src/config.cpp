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

#include "bitlamb/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bitlamb/errors.hpp"

namespace bitlamb {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for '" + key + "': " + value);
  }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value for '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean value for '" + key + "': " + value);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(known_task_names().begin(), known_task_names().end(), task) ==
      known_task_names().end()) {
    throw ConfigError("unknown task: " + task);
  }
  if (n_workers < 1) throw ConfigError("n_workers must be >= 1");
  if (batch_per_worker < 1) throw ConfigError("batch_per_worker must be >= 1");
  if (hyper.total_steps < 1) throw ConfigError("total_steps must be >= 1");
  hyper.validate();
  Schedule checked = schedule;
  checked.total_steps = hyper.total_steps;
  checked.validate();
  if (baseline_bits < 1) throw ConfigError("baseline_bits must be >= 1");
  if (is_two_stage(optimizer) && hyper.warmup_steps == 0) {
    throw ConfigError("two-stage optimizers need warmup_steps >= 1");
  }
  if (task != "quadratic_drift" &&
      (task_options.drift_step != 0 || task_options.drift_factor != 1.0)) {
    throw ConfigError("drift_step/drift_factor apply to quadratic_drift only");
  }
  if (task_options.dataset_size <
      static_cast<std::size_t>(n_workers) * batch_per_worker) {
    throw ConfigError("dataset_size must cover one full global batch");
  }
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": empty key or value");
    }

    if (key == "task") {
      cfg.task = value;
    } else if (key == "n_workers") {
      cfg.n_workers = static_cast<int>(parse_unsigned(key, value));
    } else if (key == "batch_per_worker") {
      cfg.batch_per_worker = parse_unsigned(key, value);
    } else if (key == "optimizer") {
      const auto variant = parse_optimizer_variant(value);
      if (!variant) throw ConfigError("unknown optimizer: " + value);
      cfg.optimizer = *variant;
    } else if (key == "compressor") {
      if (value == "onebit") {
        cfg.compressor = CompressorKind::kOneBit;
      } else if (value == "identity") {
        cfg.compressor = CompressorKind::kIdentity;
      } else {
        throw ConfigError("unknown compressor: " + value);
      }
    } else if (key == "seed") {
      cfg.seed = parse_unsigned(key, value);
    } else if (key == "total_steps") {
      cfg.hyper.total_steps = parse_unsigned(key, value);
    } else if (key == "warmup_steps") {
      cfg.hyper.warmup_steps = parse_unsigned(key, value);
    } else if (key == "learning_rate") {
      cfg.schedule.peak = parse_double(key, value);
    } else if (key == "beta1") {
      cfg.hyper.beta1 = parse_double(key, value);
    } else if (key == "beta2") {
      cfg.hyper.beta2 = parse_double(key, value);
    } else if (key == "beta3") {
      cfg.hyper.beta3 = parse_double(key, value);
    } else if (key == "eta") {
      cfg.hyper.eta = parse_double(key, value);
    } else if (key == "c_min") {
      cfg.hyper.c_min = parse_double(key, value);
    } else if (key == "c_max") {
      cfg.hyper.c_max = parse_double(key, value);
    } else if (key == "r_min") {
      cfg.hyper.r_min = parse_double(key, value);
    } else if (key == "r_max") {
      cfg.hyper.r_max = parse_double(key, value);
    } else if (key == "r_threshold") {
      cfg.hyper.r_threshold = parse_double(key, value);
    } else if (key == "weight_decay") {
      cfg.hyper.weight_decay = parse_double(key, value);
    } else if (key == "division_floor") {
      cfg.hyper.division_floor = parse_double(key, value);
    } else if (key == "scaled_error_feedback") {
      cfg.hyper.scaled_error_feedback = parse_bool(key, value);
    } else if (key == "schedule") {
      const auto kind = parse_schedule_kind(value);
      if (!kind) throw ConfigError("unknown schedule: " + value);
      cfg.schedule.kind = *kind;
    } else if (key == "lr_initial") {
      cfg.schedule.initial = parse_double(key, value);
    } else if (key == "lr_final") {
      cfg.schedule.final_value = parse_double(key, value);
    } else if (key == "lr_warmup_steps") {
      cfg.schedule.warmup_steps = parse_unsigned(key, value);
    } else if (key == "lr_decay_factor") {
      cfg.schedule.decay_factor = parse_double(key, value);
    } else if (key == "lr_decay_interval") {
      cfg.schedule.decay_interval = parse_unsigned(key, value);
    } else if (key == "baseline_bits") {
      cfg.baseline_bits = static_cast<int>(parse_unsigned(key, value));
    } else if (key == "verify_compensation") {
      cfg.verify_compensation = parse_bool(key, value);
    } else if (key == "dataset_size") {
      cfg.task_options.dataset_size = parse_unsigned(key, value);
    } else if (key == "drift_step") {
      cfg.task_options.drift_step = parse_unsigned(key, value);
    } else if (key == "drift_factor") {
      cfg.task_options.drift_factor = parse_double(key, value);
    } else if (key == "metrics_path") {
      cfg.metrics_path = value;
    } else if (key == "trace_dir") {
      cfg.trace_dir = value;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  cfg.schedule.total_steps = cfg.hyper.total_steps;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "task = " << task << "\n";
  out << "n_workers = " << n_workers << "\n";
  out << "batch_per_worker = " << batch_per_worker << "\n";
  out << "optimizer = " << to_string(optimizer) << "\n";
  out << "compressor = " << to_string(compressor) << "\n";
  out << "seed = " << seed << "\n";
  out << "total_steps = " << hyper.total_steps << "\n";
  out << "warmup_steps = " << hyper.warmup_steps << "\n";
  out << "learning_rate = " << format_double(schedule.peak) << "\n";
  out << "beta1 = " << format_double(hyper.beta1) << "\n";
  out << "beta2 = " << format_double(hyper.beta2) << "\n";
  out << "beta3 = " << format_double(hyper.beta3) << "\n";
  out << "eta = " << format_double(hyper.eta) << "\n";
  out << "c_min = " << format_double(hyper.c_min) << "\n";
  out << "c_max = " << format_double(hyper.c_max) << "\n";
  out << "r_min = " << format_double(hyper.r_min) << "\n";
  out << "r_max = " << format_double(hyper.r_max) << "\n";
  out << "r_threshold = " << format_double(hyper.r_threshold) << "\n";
  out << "weight_decay = " << format_double(hyper.weight_decay) << "\n";
  out << "division_floor = " << format_double(hyper.division_floor) << "\n";
  out << "scaled_error_feedback = "
      << (hyper.scaled_error_feedback ? "true" : "false") << "\n";
  out << "schedule = " << to_string(schedule.kind) << "\n";
  out << "lr_initial = " << format_double(schedule.initial) << "\n";
  out << "lr_final = " << format_double(schedule.final_value) << "\n";
  out << "lr_warmup_steps = " << schedule.warmup_steps << "\n";
  out << "lr_decay_factor = " << format_double(schedule.decay_factor) << "\n";
  out << "lr_decay_interval = " << schedule.decay_interval << "\n";
  out << "baseline_bits = " << baseline_bits << "\n";
  out << "verify_compensation = " << (verify_compensation ? "true" : "false")
      << "\n";
  out << "dataset_size = " << task_options.dataset_size << "\n";
  if (task == "quadratic_drift") {
    out << "drift_step = " << task_options.drift_step << "\n";
    out << "drift_factor = " << format_double(task_options.drift_factor)
        << "\n";
  }
  if (!metrics_path.empty()) out << "metrics_path = " << metrics_path << "\n";
  if (!trace_dir.empty()) out << "trace_dir = " << trace_dir << "\n";
  return out.str();
}

}  // namespace bitlamb
