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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "bitlamb/config.hpp"
#include "bitlamb/errors.hpp"
#include "bitlamb/trainer.hpp"

using namespace bitlamb;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.task = "quadratic";
  cfg.n_workers = 4;
  cfg.batch_per_worker = 8;
  cfg.optimizer = OptimizerVariant::kOneBitLamb;
  cfg.compressor = CompressorKind::kOneBit;
  cfg.seed = 1;
  cfg.hyper.total_steps = 120;
  cfg.hyper.warmup_steps = 30;
  cfg.schedule.peak = 0.02;
  cfg.task_options.dataset_size = 256;
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config files parse, reject unknown keys, and round-trip") {
  const std::string text =
      "# comment line\n"
      "task = logistic\n"
      "n_workers = 2\n"
      "batch_per_worker = 4\n"
      "optimizer = onebit_adam\n"
      "compressor = identity\n"
      "total_steps = 50   # trailing comment\n"
      "warmup_steps = 10\n"
      "learning_rate = 0.005\n"
      "dataset_size = 128\n";
  const RunConfig cfg = parse_run_config(text);
  CHECK(cfg.task == "logistic");
  CHECK(cfg.n_workers == 2);
  CHECK(cfg.optimizer == OptimizerVariant::kOneBitAdam);
  CHECK(cfg.compressor == CompressorKind::kIdentity);
  CHECK(cfg.hyper.total_steps == 50);
  CHECK(cfg.schedule.peak == 0.005);

  // serialize -> parse -> serialize is a fixed point
  const std::string once = cfg.serialize();
  CHECK(parse_run_config(once).serialize() == once);

  CHECK_THROWS_AS(parse_run_config("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("optimizer = sgd\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("total_steps = banana\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("task\n"), ConfigError);
  // drift keys are only valid on the drift task
  CHECK_THROWS_AS(parse_run_config("task = quadratic\ntotal_steps = 10\n"
                                   "warmup_steps = 2\ndrift_step = 5\n"),
                  ConfigError);
}

TEST_CASE("identical configs produce byte-identical metrics CSVs") {
  RunConfig cfg = small_config();
  cfg.metrics_path = temp_path("bitlamb_det_a.csv");
  const RunResult a = run_training(cfg);
  const std::string csv_a = read_file(cfg.metrics_path);

  cfg.metrics_path = temp_path("bitlamb_det_b.csv");
  const RunResult b = run_training(cfg);
  const std::string csv_b = read_file(cfg.metrics_path);

  CHECK(csv_a == csv_b);
  CHECK(a.summary.final_loss == b.summary.final_loss);
  CHECK(a.summary.total_bits_sent == b.summary.total_bits_sent);
}

TEST_CASE("a config sidecar with the resolved settings lands next to the CSV") {
  RunConfig cfg = small_config();
  cfg.hyper.total_steps = 20;
  cfg.hyper.warmup_steps = 5;
  cfg.metrics_path = temp_path("bitlamb_sidecar.csv");
  run_training(cfg);
  const RunConfig back = parse_run_config(read_file(cfg.metrics_path + ".config"));
  CHECK(back.serialize() == cfg.serialize());
}

TEST_CASE("n-worker runs with the identity compressor match the single-process "
          "path") {
  RunConfig distributed = small_config();
  distributed.compressor = CompressorKind::kIdentity;
  distributed.n_workers = 4;
  distributed.batch_per_worker = 8;
  const RunResult multi = run_training(distributed);

  RunConfig solo = distributed;
  solo.n_workers = 1;
  solo.batch_per_worker = 32;  // same global batch
  const RunResult single = run_training(solo);

  REQUIRE(multi.records.size() == single.records.size());
  for (std::size_t t = 0; t < multi.records.size(); ++t) {
    const double a = multi.records[t].loss;
    const double b = single.records[t].loss;
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)));
  }

  // Identity payloads are charged at baseline bits, so nothing is saved.
  CHECK(multi.summary.reduction_factor == 1.0);
}

TEST_CASE("measured ledger agrees with the closed-form volume formula") {
  RunConfig cfg = small_config();
  const RunResult result = run_training(cfg);
  const RunSummary& s = result.summary;
  CHECK(s.reduction_factor ==
        doctest::Approx(s.closed_form_reduction).epsilon(0.01));
  // compression ran for 90 of 120 steps at ~1 bit/element
  CHECK(s.measured_bits_per_element > 1.0);
  CHECK(s.measured_bits_per_element < 2.0);
  CHECK(s.compressed_collectives == 90);
  CHECK(s.lossless_collectives == 30);
}

TEST_CASE("trace files re-validate the clipping contracts on read-back") {
  RunConfig cfg = small_config();
  cfg.hyper.total_steps = 60;
  cfg.hyper.warmup_steps = 20;
  const std::string dir = temp_path("bitlamb_traces");
  std::filesystem::remove_all(dir);
  cfg.trace_dir = dir;
  const RunResult result = trace_coefficients(cfg);

  for (const std::string& layer : result.layer_names) {
    std::ifstream in(dir + "/trace_" + layer + ".csv");
    REQUIRE(in);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,c_t,r_t,v_norm,v_ratio_preclip");
    std::string line;
    double prev_r = 1.0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string field;
      std::getline(row, field, ',');
      const std::size_t step = std::stoul(field);
      std::getline(row, field, ',');
      const double c = std::stod(field);
      std::getline(row, field, ',');
      const double r = std::stod(field);
      if (step < cfg.hyper.warmup_steps) {
        CHECK(c >= cfg.hyper.c_min);
        CHECK(c <= cfg.hyper.c_max);
        CHECK(r == 1.0);
      } else {
        CHECK(r >= cfg.hyper.r_min);
        CHECK(r <= cfg.hyper.r_max);
        CHECK(std::abs(r / prev_r - 1.0) <= cfg.hyper.r_threshold + 1e-12);
      }
      prev_r = r;
      ++rows;
    }
    CHECK(rows == cfg.hyper.total_steps);
  }
}

TEST_CASE("layers with larger variance drift show larger ratio excursions") {
  RunConfig cfg = small_config();
  cfg.task = "quadratic_drift";
  cfg.hyper.total_steps = 400;
  cfg.hyper.warmup_steps = 100;
  cfg.task_options.drift_step = 100;
  cfg.task_options.drift_factor = 0.05;
  const RunResult result = run_training(cfg);

  // Per layer: how far the frozen/fresh ratio wandered from 1, and how far
  // the clipped ratio followed it.
  const std::size_t layers = result.layer_names.size();
  std::vector<double> divergence(layers, 0.0);
  std::vector<double> excursion(layers, 0.0);
  for (const MetricsRecord& rec : result.records) {
    if (rec.step < cfg.hyper.warmup_steps) continue;
    for (std::size_t l = 0; l < layers; ++l) {
      divergence[l] = std::max(divergence[l],
                               std::abs(std::log(rec.v_ratio_preclip[l])));
      excursion[l] = std::max(excursion[l], std::abs(rec.r[l] - 1.0));
    }
  }

  // Spearman rank correlation > 0 across layers.
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) rank[i] += 1.0;
      }
    }
    return rank;
  };
  const std::vector<double> ra = ranks(divergence);
  const std::vector<double> rb = ranks(excursion);
  double num = 0.0, da = 0.0, db = 0.0;
  const double mean = (static_cast<double>(layers) - 1.0) / 2.0;
  for (std::size_t l = 0; l < layers; ++l) {
    num += (ra[l] - mean) * (rb[l] - mean);
    da += (ra[l] - mean) * (ra[l] - mean);
    db += (rb[l] - mean) * (rb[l] - mean);
  }
  const double spearman = num / std::sqrt(da * db);
  INFO("spearman = ", spearman);
  CHECK(spearman > 0.0);
}

TEST_CASE("divergent runs abort but flush the partial trace") {
  RunConfig cfg = small_config();
  // The scaling coefficient bounds the update norm, so the step has to be
  // large enough for the quadratic loss to overflow outright.
  cfg.schedule.peak = 1e200;
  cfg.hyper.total_steps = 50;
  cfg.hyper.warmup_steps = 10;
  cfg.metrics_path = temp_path("bitlamb_diverged.csv");
  std::filesystem::remove(cfg.metrics_path);
  CHECK_THROWS_AS(run_training(cfg), std::runtime_error);
  CHECK(std::filesystem::exists(cfg.metrics_path));
}

TEST_CASE("csv header names every layer column") {
  const std::vector<std::string> names = {"embed", "head"};
  CHECK(metrics_csv_header(names) ==
        "step,loss,c_t.embed,c_t.head,r_t.embed,r_t.head,"
        "v_norm.embed,v_norm.head,delta_linf_max,delta_l2_max,"
        "cumulative_bits\n");
}
