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

#ifndef BITLAMB_OPTIMIZERS_HPP_
#define BITLAMB_OPTIMIZERS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bitlamb/comm_sim.hpp"
#include "bitlamb/dense_vector.hpp"
#include "bitlamb/fusion.hpp"

namespace bitlamb {

enum class OptimizerVariant {
  kLamb,           // layerwise-adaptive baseline, lossless communication
  kAdam,           // elementwise-adaptive baseline, lossless communication
  kOneBitLamb,     // two-stage: LAMB warmup, then compressed momentum with
                   // variance-ratio-adapted layerwise coefficients
  kLambBasicOneBit,// ablation: LAMB warmup, then compressed momentum with the
                   // scaling coefficients frozen at their warmup average
  kOneBitAdam,     // two-stage: Adam warmup, then compressed momentum with the
                   // frozen variance as preconditioner
};

const char* to_string(OptimizerVariant variant);
std::optional<OptimizerVariant> parse_optimizer_variant(const std::string& name);
bool is_two_stage(OptimizerVariant variant);

struct HyperParams {
  double beta1 = 0.9;          // momentum decay
  double beta2 = 0.999;        // variance decay
  double beta3 = 0.9;          // scaling-coefficient moving-average decay
  double eta = 1e-6;           // additive constant guarding divisions
  double c_min = 0.01;         // scaling-coefficient clip bounds
  double c_max = 0.3;
  double r_min = 0.5;          // scaling-ratio clip bounds
  double r_max = 4.0;
  double r_threshold = 0.1;    // relative per-step ratio-change bound
  double weight_decay = 0.0;   // decoupled, folded into the update direction
  double division_floor = 1e-12;  // lower bound on ratio denominators
  std::size_t total_steps = 0;    // T
  std::size_t warmup_steps = 0;   // T_w
  // Experimental: scale the carried residual by c_mean(t-2)/c_mean(t-1)
  // instead of carrying it unchanged.
  bool scaled_error_feedback = false;

  void validate() const;  // throws ConfigError on violations
};

/// Per-layer (per-tensor) optimizer state. v_frozen/m_prev appear when the
/// warmup stage finalizes and are required by every compression-stage step.
struct LayerState {
  std::string name;
  DenseVector x;  // parameters
  DenseVector m;  // momentum
  DenseVector v;  // second moment
  std::optional<DenseVector> v_frozen;
  std::optional<DenseVector> m_prev;  // last step's post-communication momentum
  double c_avg = 0.0;
  double r_prev = 1.0;
  double scale_coeff = 1.0;
};

/// Per-step diagnostics, one entry per layer.
struct StepTrace {
  std::vector<double> c;                // scaling coefficient applied
  std::vector<double> r;                // scaling ratio (1 during warmup)
  std::vector<double> v_norm;           // ||v||_2 of the live second moment
  std::vector<double> v_ratio_preclip;  // ||v_frozen / v||_inf before clipping
  bool compressed = false;              // whether this step used compression
};

/// Data-parallel training step driver for all five variants. Owns the
/// per-layer state; one instance corresponds to the replicated model (the
/// simulation materializes parameters once, as every replica holds identical
/// values by construction).
class Optimizer {
 public:
  struct LayerSpec {
    std::string name;
    std::size_t size = 0;
  };

  Optimizer(OptimizerVariant variant, std::span<const LayerSpec> layout,
            HyperParams hp);

  /// One training step. local_grads[i][l] is worker i's mean gradient for
  /// layer l at step t. The cluster carries the communication (and its
  /// ledger); lr is the scheduled learning rate gamma_t.
  StepTrace step(std::span<const std::vector<DenseVector>> local_grads,
                 std::size_t t, double lr, SimCluster& cluster);

  const std::vector<LayerState>& layers() const { return layers_; }
  std::vector<LayerState>& mutable_layers() { return layers_; }
  const FusedLayout& fused_layout() const { return layout_; }
  const HyperParams& hyper_params() const { return hp_; }
  OptimizerVariant variant() const { return variant_; }
  const MomentumScales& momentum_scales() const { return scales_; }
  bool frozen() const { return frozen_; }
  std::size_t fused_dim() const { return layout_.total; }

 private:
  StepTrace lamb_step(std::span<const DenseVector> grads, double lr,
                      bool track_c_avg);
  StepTrace adam_step(std::span<const DenseVector> grads, double lr);
  StepTrace compressed_step(
      std::span<const std::vector<DenseVector>> local_grads, double lr,
      SimCluster& cluster);
  void finalize_warmup();
  std::vector<DenseVector> average_lossless(
      std::span<const std::vector<DenseVector>> local_grads,
      SimCluster& cluster);
  void check_gradients(std::span<const std::vector<DenseVector>> local_grads,
                       std::size_t t) const;
  double current_error_scale();

  OptimizerVariant variant_;
  HyperParams hp_;
  std::vector<LayerState> layers_;
  FusedLayout layout_;
  MomentumScales scales_;
  bool frozen_ = false;
  // Scratch reused across steps.
  std::vector<DenseVector> worker_streams_;
  DenseVector fused_scratch_;
  // History of mean scaling coefficients for the experimental residual scale.
  double c_mean_prev_ = 1.0;
  double c_mean_prev2_ = 1.0;
};

}  // namespace bitlamb

#endif  // BITLAMB_OPTIMIZERS_HPP_
