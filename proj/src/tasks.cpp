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

#include "bitlamb/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "bitlamb/errors.hpp"

namespace bitlamb {

namespace {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(seed * 0x9e3779b97f4a7c15ULL + stream);
}

std::size_t total_size(const std::vector<LayerShape>& layers) {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.size;
  return total;
}

}  // namespace

std::vector<DenseVector> Task::initial_params(std::uint64_t seed) const {
  std::mt19937_64 rng = seeded_rng(seed, 17);
  std::normal_distribution<double> normal(0.0, init_sigma_);
  std::vector<DenseVector> params;
  params.reserve(layers_.size());
  for (const auto& layer : layers_) {
    DenseVector x(layer.size);
    for (std::size_t k = 0; k < layer.size; ++k) x[k] = normal(rng);
    params.push_back(std::move(x));
  }
  return params;
}

double Task::full_loss(const ParamsView& x) const {
  std::vector<std::size_t> all(dataset_size_);
  std::iota(all.begin(), all.end(), 0);
  return loss(x, all);
}

namespace {

// Per-coordinate least squares with a per-layer conditioning spread: sample i
// contributes 0.5 * (s_k * x_k - y_{i,k})^2 per coordinate, where the feature
// scale s_k varies by a decade within each layer and by layer, and the target
// y_{i,k} = s_k * theta_k + sigma_l * eps_{i,k} is fixed at generation time.
// The mean gradient is linear in the batch. The drift variant multiplies the
// feature scales mid-run (targets stay fixed), which both moves the optimum
// and changes the gradient magnitudes, so the frozen and fresh second moments
// separate.
class QuadraticTask : public Task {
 public:
  QuadraticTask(std::uint64_t seed, const TaskOptions& options, bool drifting)
      : drifting_(drifting), drift_step_(options.drift_step),
        drift_factor_(options.drift_factor) {
    name_ = drifting ? "quadratic_drift" : "quadratic";
    layers_ = {{"embed", 64}, {"hidden0", 128}, {"hidden1", 256}, {"head", 16}};
    dataset_size_ = options.dataset_size;
    init_sigma_ = 0.5;

    const std::vector<double> base_curvature = {0.25, 1.0, 4.0, 0.5};
    const std::vector<double> base_noise = {0.20, 0.30, 0.40, 0.25};
    noise_scale_ = base_noise;

    std::mt19937_64 rng = seeded_rng(seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    feature_scale_.resize(layers_.size());
    target_base_.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::size_t d = layers_[l].size;
      feature_scale_[l].assign(d, 0.0);
      target_base_[l].assign(d, 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        // Log-spaced curvature spread of one decade around the layer base.
        const double frac = d > 1 ? static_cast<double>(k) /
                                        static_cast<double>(d - 1)
                                  : 0.5;
        const double curvature =
            base_curvature[l] * std::pow(10.0, frac - 0.5);
        feature_scale_[l][k] = std::sqrt(curvature);
        target_base_[l][k] = feature_scale_[l][k] * normal(rng);
      }
    }
    noise_.resize(dataset_size_);
    const std::size_t d_total = total_size(layers_);
    for (std::size_t i = 0; i < dataset_size_; ++i) {
      noise_[i].resize(d_total);
      for (double& e : noise_[i]) e = normal(rng);
    }
  }

  void at_step(std::size_t t) override {
    if (!drifting_ || t != drift_step_) return;
    // Per-layer graded rescaling: layer 0 keeps its features, the last layer
    // gets the full factor.
    const std::size_t count = layers_.size();
    for (std::size_t l = 0; l < count; ++l) {
      const double frac = count > 1 ? static_cast<double>(l) /
                                          static_cast<double>(count - 1)
                                    : 1.0;
      const double factor = std::pow(drift_factor_, frac);
      for (double& s : feature_scale_[l]) s *= factor;
    }
  }

  double loss(const ParamsView& x,
              std::span<const std::size_t> samples) const override {
    double acc = 0.0;
    for (std::size_t idx : samples) {
      const std::vector<double>& eps = noise_.at(idx);
      std::size_t base = 0;
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::size_t d = layers_[l].size;
        for (std::size_t k = 0; k < d; ++k) {
          const double r = feature_scale_[l][k] * x[l][k] -
                           target_base_[l][k] -
                           noise_scale_[l] * eps[base + k];
          acc += 0.5 * r * r;
        }
        base += d;
      }
    }
    return acc / static_cast<double>(samples.size());
  }

  void gradient(const ParamsView& x, std::span<const std::size_t> samples,
                const GradSink& out) const override {
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      std::fill(out[l].begin(), out[l].end(), 0.0);
    }
    for (std::size_t idx : samples) {
      const std::vector<double>& eps = noise_.at(idx);
      std::size_t base = 0;
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::size_t d = layers_[l].size;
        for (std::size_t k = 0; k < d; ++k) {
          const double r = feature_scale_[l][k] * x[l][k] -
                           target_base_[l][k] -
                           noise_scale_[l] * eps[base + k];
          out[l][k] += inv * feature_scale_[l][k] * r;
        }
        base += d;
      }
    }
  }

 private:
  bool drifting_;
  std::size_t drift_step_;
  double drift_factor_;
  std::vector<std::vector<double>> feature_scale_;  // s, rescaled on drift
  std::vector<std::vector<double>> target_base_;    // s0 * theta, fixed
  std::vector<double> noise_scale_;                 // sigma_l, fixed
  std::vector<std::vector<double>> noise_;          // eps, per sample
};

// Binary logistic regression on two noisy Gaussian clusters.
class LogisticTask : public Task {
 public:
  LogisticTask(std::uint64_t seed, const TaskOptions& options) {
    name_ = "logistic";
    layers_ = {{"weight", kFeatures}, {"bias", 1}};
    dataset_size_ = options.dataset_size;
    init_sigma_ = 0.3;

    std::mt19937_64 rng = seeded_rng(seed, 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<double> direction(kFeatures);
    double norm = 0.0;
    for (double& c : direction) {
      c = normal(rng);
      norm += c * c;
    }
    norm = std::sqrt(norm);
    for (double& c : direction) c *= 1.5 / norm;

    features_.resize(dataset_size_);
    labels_.resize(dataset_size_);
    for (std::size_t i = 0; i < dataset_size_; ++i) {
      const int y = coin(rng);
      labels_[i] = y;
      features_[i].resize(kFeatures);
      for (std::size_t k = 0; k < kFeatures; ++k) {
        features_[i][k] = (y == 1 ? direction[k] : -direction[k]) + normal(rng);
      }
    }
  }

  double loss(const ParamsView& x,
              std::span<const std::size_t> samples) const override {
    double acc = 0.0;
    for (std::size_t idx : samples) {
      const double s = score(x, idx);
      // log(1 + exp(-margin)) with the stable split by sign.
      const double margin = labels_[idx] == 1 ? s : -s;
      acc += margin >= 0.0 ? std::log1p(std::exp(-margin))
                           : -margin + std::log1p(std::exp(margin));
    }
    return acc / static_cast<double>(samples.size());
  }

  void gradient(const ParamsView& x, std::span<const std::size_t> samples,
                const GradSink& out) const override {
    std::fill(out[0].begin(), out[0].end(), 0.0);
    std::fill(out[1].begin(), out[1].end(), 0.0);
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (std::size_t idx : samples) {
      const double p = sigmoid(score(x, idx));
      const double err = inv * (p - static_cast<double>(labels_[idx]));
      for (std::size_t k = 0; k < kFeatures; ++k) {
        out[0][k] += err * features_[idx][k];
      }
      out[1][0] += err;
    }
  }

 private:
  static constexpr std::size_t kFeatures = 32;

  static double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
  }

  double score(const ParamsView& x, std::size_t idx) const {
    double s = x[1][0];
    for (std::size_t k = 0; k < kFeatures; ++k) {
      s += x[0][k] * features_[idx][k];
    }
    return s;
  }

  std::vector<std::vector<double>> features_;
  std::vector<int> labels_;
};

// Two-layer tanh MLP regressing a fixed random teacher, mean-squared error.
class MlpTask : public Task {
 public:
  MlpTask(std::uint64_t seed, const TaskOptions& options) {
    name_ = "mlp";
    layers_ = {{"w1", kIn * kHidden}, {"b1", kHidden}, {"w2", kHidden},
               {"b2", 1}};
    dataset_size_ = options.dataset_size;
    init_sigma_ = 0.3;

    std::mt19937_64 rng = seeded_rng(seed, 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<DenseVector> teacher;
    for (const auto& layer : layers_) {
      DenseVector w(layer.size);
      for (std::size_t k = 0; k < layer.size; ++k) w[k] = normal(rng);
      teacher.push_back(std::move(w));
    }

    inputs_.resize(dataset_size_);
    targets_.resize(dataset_size_);
    ParamsView teacher_view;
    for (const auto& w : teacher) teacher_view.push_back(w.span());
    for (std::size_t i = 0; i < dataset_size_; ++i) {
      inputs_[i].resize(kIn);
      for (double& v : inputs_[i]) v = normal(rng);
      targets_[i] = forward(teacher_view, inputs_[i]) + 0.05 * normal(rng);
    }
  }

  double loss(const ParamsView& x,
              std::span<const std::size_t> samples) const override {
    double acc = 0.0;
    for (std::size_t idx : samples) {
      const double err = forward(x, inputs_[idx]) - targets_[idx];
      acc += 0.5 * err * err;
    }
    return acc / static_cast<double>(samples.size());
  }

  void gradient(const ParamsView& x, std::span<const std::size_t> samples,
                const GradSink& out) const override {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      std::fill(out[l].begin(), out[l].end(), 0.0);
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    std::vector<double> hidden(kHidden);
    for (std::size_t idx : samples) {
      const std::vector<double>& in = inputs_[idx];
      double y = x[3][0];
      for (std::size_t h = 0; h < kHidden; ++h) {
        double pre = x[1][h];
        for (std::size_t c = 0; c < kIn; ++c) {
          pre += x[0][h * kIn + c] * in[c];
        }
        hidden[h] = std::tanh(pre);
        y += x[2][h] * hidden[h];
      }
      const double err = inv * (y - targets_[idx]);
      out[3][0] += err;
      for (std::size_t h = 0; h < kHidden; ++h) {
        out[2][h] += err * hidden[h];
        const double back = err * x[2][h] * (1.0 - hidden[h] * hidden[h]);
        out[1][h] += back;
        for (std::size_t c = 0; c < kIn; ++c) {
          out[0][h * kIn + c] += back * in[c];
        }
      }
    }
  }

 private:
  static constexpr std::size_t kIn = 8;
  static constexpr std::size_t kHidden = 16;

  static double forward(const ParamsView& x, const std::vector<double>& in) {
    double y = x[3][0];
    for (std::size_t h = 0; h < kHidden; ++h) {
      double pre = x[1][h];
      for (std::size_t c = 0; c < kIn; ++c) {
        pre += x[0][h * kIn + c] * in[c];
      }
      y += x[2][h] * std::tanh(pre);
    }
    return y;
  }

  std::vector<std::vector<double>> inputs_;
  std::vector<double> targets_;
};

}  // namespace

std::unique_ptr<Task> make_task(const std::string& name, std::uint64_t seed,
                                const TaskOptions& options) {
  check_arg(options.dataset_size > 0, "task: dataset_size must be > 0");
  if (name == "quadratic") {
    return std::make_unique<QuadraticTask>(seed, options, /*drifting=*/false);
  }
  if (name == "quadratic_drift") {
    return std::make_unique<QuadraticTask>(seed, options, /*drifting=*/true);
  }
  if (name == "logistic") {
    return std::make_unique<LogisticTask>(seed, options);
  }
  if (name == "mlp") {
    return std::make_unique<MlpTask>(seed, options);
  }
  throw ConfigError("unknown task: " + name);
}

std::vector<std::string> known_task_names() {
  return {"quadratic", "logistic", "mlp", "quadratic_drift"};
}

double gradient_check(const Task& task, std::vector<DenseVector> x,
                      std::span<const std::size_t> samples, std::uint64_t seed,
                      int probes) {
  check_arg(probes > 0, "gradient_check: probes must be > 0");
  ParamsView view;
  for (const auto& layer : x) view.push_back(layer.span());

  std::vector<DenseVector> grads;
  GradSink sink;
  for (const auto& layer : x) grads.emplace_back(layer.size());
  for (auto& g : grads) sink.push_back(g.span());
  task.gradient(view, samples, sink);

  std::mt19937_64 rng = seeded_rng(seed, 29);
  std::uniform_int_distribution<std::size_t> pick_layer(0, x.size() - 1);

  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t l = pick_layer(rng);
    std::uniform_int_distribution<std::size_t> pick_k(0, x[l].size() - 1);
    const std::size_t k = pick_k(rng);

    const double saved = x[l][k];
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    x[l][k] = saved + h;
    const double up = task.loss(view, samples);
    x[l][k] = saved - h;
    const double down = task.loss(view, samples);
    x[l][k] = saved;

    const double fd = (up - down) / (2.0 * h);
    // The difference quotient carries cancellation noise of about
    // eps * |loss| / h; keep the denominator above that so probes at
    // near-zero gradient coordinates measure the quotient's noise, not a
    // fictitious relative error.
    const double noise_floor =
        (std::abs(up) + std::abs(down)) * 1e-10 / h;
    const double denom =
        std::max({std::abs(fd), std::abs(grads[l][k]), noise_floor, 1e-12});
    worst = std::max(worst, std::abs(fd - grads[l][k]) / denom);
  }
  return worst;
}

}  // namespace bitlamb
