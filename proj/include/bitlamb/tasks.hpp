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

#ifndef BITLAMB_TASKS_HPP_
#define BITLAMB_TASKS_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bitlamb/dense_vector.hpp"

namespace bitlamb {

/// Per-layer read-only parameter views / writable gradient sinks.
using ParamsView = std::vector<std::span<const double>>;
using GradSink = std::vector<std::span<double>>;

struct LayerShape {
  std::string name;
  std::size_t size = 0;
};

/// A toy training problem with analytic gradients and a deterministic
/// synthetic dataset (a pure function of the seed).
class Task {
 public:
  virtual ~Task() = default;

  const std::string& name() const { return name_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t dataset_size() const { return dataset_size_; }

  /// Mean loss over the given sample indices.
  virtual double loss(const ParamsView& x,
                      std::span<const std::size_t> samples) const = 0;
  /// Mean gradient over the given sample indices; writes every layer sink.
  virtual void gradient(const ParamsView& x,
                        std::span<const std::size_t> samples,
                        const GradSink& out) const = 0;

  /// Deterministic starting point.
  std::vector<DenseVector> initial_params(std::uint64_t seed) const;

  /// Called once at the start of every training step; tasks that change
  /// mid-run (the variance-drift variant) hook in here.
  virtual void at_step(std::size_t /*t*/) {}

  double full_loss(const ParamsView& x) const;

 protected:
  std::string name_;
  std::vector<LayerShape> layers_;
  std::size_t dataset_size_ = 0;
  double init_sigma_ = 0.5;
};

struct TaskOptions {
  std::size_t dataset_size = 1024;
  // variance-drift task only: at step drift_step, per-layer gradient-noise
  // scales are multiplied by drift_factor^(l / (L-1)).
  std::size_t drift_step = 0;
  double drift_factor = 1.0;
};

/// Known tasks: quadratic, logistic, mlp, quadratic_drift.
std::unique_ptr<Task> make_task(const std::string& name, std::uint64_t seed,
                                const TaskOptions& options = {});

std::vector<std::string> known_task_names();

/// Central finite-difference validation of Task::gradient on `probes`
/// randomly chosen coordinates; returns the worst relative deviation.
double gradient_check(const Task& task, std::vector<DenseVector> x,
                      std::span<const std::size_t> samples, std::uint64_t seed,
                      int probes);

}  // namespace bitlamb

#endif  // BITLAMB_TASKS_HPP_
