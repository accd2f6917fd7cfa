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

#include "bitlamb/optimizers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bitlamb/errors.hpp"
#include "bitlamb/kernels.hpp"
#include "bitlamb/vector_ops.hpp"

namespace bitlamb {

const char* to_string(OptimizerVariant variant) {
  switch (variant) {
    case OptimizerVariant::kLamb:
      return "lamb";
    case OptimizerVariant::kAdam:
      return "adam";
    case OptimizerVariant::kOneBitLamb:
      return "onebit_lamb";
    case OptimizerVariant::kLambBasicOneBit:
      return "lamb_basic_1bit";
    case OptimizerVariant::kOneBitAdam:
      return "onebit_adam";
  }
  return "unknown";
}

std::optional<OptimizerVariant> parse_optimizer_variant(
    const std::string& name) {
  if (name == "lamb") return OptimizerVariant::kLamb;
  if (name == "adam") return OptimizerVariant::kAdam;
  if (name == "onebit_lamb") return OptimizerVariant::kOneBitLamb;
  if (name == "lamb_basic_1bit") return OptimizerVariant::kLambBasicOneBit;
  if (name == "onebit_adam") return OptimizerVariant::kOneBitAdam;
  return std::nullopt;
}

bool is_two_stage(OptimizerVariant variant) {
  return variant == OptimizerVariant::kOneBitLamb ||
         variant == OptimizerVariant::kLambBasicOneBit ||
         variant == OptimizerVariant::kOneBitAdam;
}

void HyperParams::validate() const {
  auto reject = [](const char* msg) { throw ConfigError(msg); };
  if (!(beta1 >= 0.0 && beta1 < 1.0)) reject("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) reject("beta2 must be in [0, 1)");
  if (!(beta3 >= 0.0 && beta3 < 1.0)) reject("beta3 must be in [0, 1)");
  if (!(eta > 0.0)) reject("eta must be > 0");
  if (!(c_min <= c_max)) reject("c_min must not exceed c_max");
  if (!(r_min <= r_max)) reject("r_min must not exceed r_max");
  if (!(r_threshold > 0.0 && r_threshold < 1.0))
    reject("r_threshold must be in (0, 1)");
  if (!(weight_decay >= 0.0)) reject("weight_decay must be >= 0");
  if (!(division_floor > 0.0)) reject("division_floor must be > 0");
  if (warmup_steps > total_steps)
    reject("warmup_steps must not exceed total_steps");
}

Optimizer::Optimizer(OptimizerVariant variant,
                     std::span<const LayerSpec> layout, HyperParams hp)
    : variant_(variant), hp_(hp) {
  hp_.validate();
  check_arg(!layout.empty(), "Optimizer: need at least one layer");
  std::vector<std::size_t> lengths;
  lengths.reserve(layout.size());
  layers_.reserve(layout.size());
  for (const LayerSpec& spec : layout) {
    check_arg(spec.size > 0, "Optimizer: layer size must be > 0");
    LayerState state;
    state.name = spec.name;
    state.x = DenseVector(spec.size);
    state.m = DenseVector(spec.size);
    state.v = DenseVector(spec.size);
    layers_.push_back(std::move(state));
    lengths.push_back(spec.size);
  }
  layout_ = FusedLayout::from_lengths(lengths);
  scales_ = MomentumScales::uniform(layers_.size());
  fused_scratch_ = DenseVector(layout_.total);
}

void Optimizer::check_gradients(
    std::span<const std::vector<DenseVector>> local_grads,
    std::size_t t) const {
  check_arg(!local_grads.empty(), "step: no worker gradients");
  for (std::size_t i = 0; i < local_grads.size(); ++i) {
    check_same_size(local_grads[i].size(), layers_.size(),
                    "step: per-worker layer count");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      check_same_size(local_grads[i][l].size(), layers_[l].x.size(),
                      "step: gradient length");
      if (!kernels::all_finite(local_grads[i][l])) {
        std::ostringstream msg;
        msg << "non-finite gradient at step " << t << ", worker " << i
            << ", layer '" << layers_[l].name << "'";
        throw std::runtime_error(msg.str());
      }
    }
  }
}

std::vector<DenseVector> Optimizer::average_lossless(
    std::span<const std::vector<DenseVector>> local_grads,
    SimCluster& cluster) {
  const std::size_t n = local_grads.size();
  if (worker_streams_.size() != n) {
    worker_streams_.assign(n, DenseVector(layout_.total));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      kernels::copy(layout_.view(worker_streams_[i], l), local_grads[i][l]);
    }
  }
  DenseVector fused_avg = cluster.lossless_allreduce(worker_streams_);
  std::vector<DenseVector> averaged;
  averaged.reserve(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    averaged.emplace_back(std::span<const double>(layout_.view(fused_avg, l)));
  }
  return averaged;
}

StepTrace Optimizer::lamb_step(std::span<const DenseVector> grads, double lr,
                               bool track_c_avg) {
  StepTrace trace;
  trace.c.reserve(layers_.size());
  trace.r.assign(layers_.size(), 1.0);
  trace.v_norm.reserve(layers_.size());
  trace.v_ratio_preclip.assign(layers_.size(), 1.0);
  DenseVector update;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    LayerState& layer = layers_[l];
    kernels::axpby(layer.m, hp_.beta1, 1.0 - hp_.beta1, grads[l]);
    kernels::axpby_square(layer.v, hp_.beta2, 1.0 - hp_.beta2, grads[l]);

    update = DenseVector(layer.x.size());
    kernels::precondition(update, layer.m, layer.v, hp_.eta);
    if (hp_.weight_decay > 0.0) {
      kernels::axpy(update, hp_.weight_decay, layer.x);
    }

    const double x_norm = l2_norm(layer.x);
    const double u_norm = l2_norm(update);
    double c;
    if (u_norm == 0.0) {
      // The update is zero either way; pick a finite, in-range coefficient.
      c = x_norm > 0.0 ? hp_.c_max : clip(1.0, hp_.c_min, hp_.c_max);
    } else {
      c = clip(x_norm / u_norm, hp_.c_min, hp_.c_max);
    }
    kernels::axpy(layer.x, -lr * c, update);

    if (track_c_avg) {
      layer.c_avg = hp_.beta3 * layer.c_avg + (1.0 - hp_.beta3) * c;
    }
    trace.c.push_back(c);
    trace.v_norm.push_back(l2_norm(layer.v));
  }
  return trace;
}

StepTrace Optimizer::adam_step(std::span<const DenseVector> grads, double lr) {
  StepTrace trace;
  trace.c.assign(layers_.size(), 1.0);
  trace.r.assign(layers_.size(), 1.0);
  trace.v_norm.reserve(layers_.size());
  trace.v_ratio_preclip.assign(layers_.size(), 1.0);
  DenseVector update;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    LayerState& layer = layers_[l];
    kernels::axpby(layer.m, hp_.beta1, 1.0 - hp_.beta1, grads[l]);
    kernels::axpby_square(layer.v, hp_.beta2, 1.0 - hp_.beta2, grads[l]);

    update = DenseVector(layer.x.size());
    kernels::precondition(update, layer.m, layer.v, hp_.eta);
    if (hp_.weight_decay > 0.0) {
      kernels::axpy(update, hp_.weight_decay, layer.x);
    }
    kernels::axpy(layer.x, -lr, update);
    trace.v_norm.push_back(l2_norm(layer.v));
  }
  return trace;
}

void Optimizer::finalize_warmup() {
  for (LayerState& layer : layers_) {
    layer.v_frozen = layer.v;
    if (variant_ == OptimizerVariant::kOneBitLamb) {
      layer.m_prev = layer.m;
    }
  }
  if (variant_ == OptimizerVariant::kOneBitAdam) {
    scales_ = MomentumScales::uniform(layers_.size());
  } else {
    std::vector<DenseVector> momenta;
    momenta.reserve(layers_.size());
    for (const LayerState& layer : layers_) momenta.push_back(layer.m);
    scales_ = compute_scales(momenta, hp_.division_floor);
  }
  double c_mean = 0.0;
  for (const LayerState& layer : layers_) {
    c_mean += variant_ == OptimizerVariant::kOneBitAdam ? 1.0 : layer.c_avg;
  }
  c_mean /= static_cast<double>(layers_.size());
  c_mean_prev_ = c_mean_prev2_ = std::max(c_mean, hp_.division_floor);
  frozen_ = true;
}

double Optimizer::current_error_scale() {
  if (!hp_.scaled_error_feedback) return 1.0;
  return c_mean_prev2_ / c_mean_prev_;
}

StepTrace Optimizer::compressed_step(
    std::span<const std::vector<DenseVector>> local_grads, double lr,
    SimCluster& cluster) {
  if (!frozen_) {
    throw StageOrderError(
        "compression-stage step before warmup finalized: frozen variance, "
        "c_avg and momentum snapshot are missing");
  }
  const std::size_t n = local_grads.size();
  check_same_size(n, static_cast<std::size_t>(cluster.n_workers()),
                  "compressed step: worker count");
  if (worker_streams_.size() != n) {
    worker_streams_.assign(n, DenseVector(layout_.total));
  }

  // Worker-local momentum, fused and magnitude-equalized in one pass:
  // stream_l = coeff_l * (beta1 * m_l + (1 - beta1) * g_l).
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const double coeff = scales_.coeff[l];
      kernels::linear_combine(layout_.view(worker_streams_[i], l),
                              coeff * hp_.beta1, layers_[l].m,
                              coeff * (1.0 - hp_.beta1), local_grads[i][l]);
    }
  }

  DenseVector fused_global =
      cluster.compressed_allreduce(worker_streams_, current_error_scale());
  remove_scaling(fused_global, layout_, scales_);

  StepTrace trace;
  trace.compressed = true;
  trace.c.reserve(layers_.size());
  trace.r.reserve(layers_.size());
  trace.v_norm.reserve(layers_.size());
  trace.v_ratio_preclip.reserve(layers_.size());

  DenseVector reconstructed;
  DenseVector update;
  double c_sum = 0.0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    LayerState& layer = layers_[l];
    const auto m_global = layout_.view(fused_global, l);

    double c = 1.0;
    double r = 1.0;
    double preclip = 1.0;
    if (variant_ == OptimizerVariant::kOneBitLamb) {
      if (!layer.m_prev) {
        throw StageOrderError("compressed step: momentum snapshot missing");
      }
      // Invert the momentum recurrence to recover the global gradient, then
      // keep a fresh variance alongside the frozen one.
      reconstructed = DenseVector(layer.x.size());
      const double inv = 1.0 / (1.0 - hp_.beta1);
      kernels::linear_combine(reconstructed, inv, m_global,
                              -hp_.beta1 * inv, *layer.m_prev);
      if (!kernels::all_finite(reconstructed)) {
        std::ostringstream msg;
        msg << "non-finite reconstructed gradient for layer '" << layer.name
            << "'";
        throw std::runtime_error(msg.str());
      }
      kernels::axpby_square(layer.v, hp_.beta2, 1.0 - hp_.beta2, reconstructed);

      preclip = inf_norm_of_ratio(*layer.v_frozen, layer.v, hp_.division_floor);
      r = clip(preclip, (1.0 - hp_.r_threshold) * layer.r_prev,
               (1.0 + hp_.r_threshold) * layer.r_prev);
      r = clip(r, hp_.r_min, hp_.r_max);
      c = r * layer.c_avg;
    } else if (variant_ == OptimizerVariant::kLambBasicOneBit) {
      c = layer.c_avg;
    }  // kOneBitAdam keeps c = 1 (no layerwise scaling).

    if (!layer.v_frozen) {
      throw StageOrderError("compressed step: frozen variance missing");
    }
    update = DenseVector(layer.x.size());
    kernels::precondition(update, m_global, *layer.v_frozen, hp_.eta);
    if (hp_.weight_decay > 0.0) {
      kernels::axpy(update, hp_.weight_decay, layer.x);
    }
    kernels::axpy(layer.x, -lr * c, update);

    if (variant_ == OptimizerVariant::kOneBitLamb) {
      kernels::copy(layer.m_prev->span(), m_global);
      layer.r_prev = r;
    }
    kernels::copy(layer.m.span(), m_global);

    c_sum += c;
    trace.c.push_back(c);
    trace.r.push_back(r);
    trace.v_norm.push_back(l2_norm(layer.v));
    trace.v_ratio_preclip.push_back(preclip);
  }

  c_mean_prev2_ = c_mean_prev_;
  c_mean_prev_ = std::max(c_sum / static_cast<double>(layers_.size()),
                          hp_.division_floor);
  return trace;
}

StepTrace Optimizer::step(
    std::span<const std::vector<DenseVector>> local_grads, std::size_t t,
    double lr, SimCluster& cluster) {
  check_gradients(local_grads, t);
  check_same_size(local_grads.size(),
                  static_cast<std::size_t>(cluster.n_workers()),
                  "step: worker count");

  StepTrace trace;
  if (!is_two_stage(variant_)) {
    std::vector<DenseVector> averaged = average_lossless(local_grads, cluster);
    trace = variant_ == OptimizerVariant::kLamb
                ? lamb_step(averaged, lr, /*track_c_avg=*/false)
                : adam_step(averaged, lr);
    return trace;
  }

  if (t < hp_.warmup_steps) {
    std::vector<DenseVector> averaged = average_lossless(local_grads, cluster);
    if (variant_ == OptimizerVariant::kOneBitAdam) {
      trace = adam_step(averaged, lr);
    } else {
      trace = lamb_step(averaged, lr, /*track_c_avg=*/true);
    }
    if (t + 1 == hp_.warmup_steps) {
      finalize_warmup();
    }
    return trace;
  }
  return compressed_step(local_grads, lr, cluster);
}

}  // namespace bitlamb
