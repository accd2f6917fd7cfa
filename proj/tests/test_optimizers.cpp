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
#include <random>

#include <doctest.h>

#include "bitlamb/errors.hpp"
#include "bitlamb/optimizers.hpp"
#include "bitlamb/vector_ops.hpp"
#include "reference_impl.hpp"

using namespace bitlamb;

namespace {

SimCluster make_cluster(int n, std::size_t dim, CompressorKind kind) {
  SimCluster::Config cfg;
  cfg.n_workers = n;
  cfg.dim = dim;
  cfg.compressor = kind;
  return SimCluster(cfg);
}

std::vector<std::vector<DenseVector>> single_worker_grads(
    std::vector<DenseVector> grads) {
  std::vector<std::vector<DenseVector>> out;
  out.push_back(std::move(grads));
  return out;
}

HyperParams default_hp(std::size_t total, std::size_t warmup) {
  HyperParams hp;
  hp.total_steps = total;
  hp.warmup_steps = warmup;
  return hp;
}

}  // namespace

TEST_CASE("hyper-parameter validation rejects out-of-range values") {
  HyperParams hp = default_hp(10, 2);
  hp.beta1 = 1.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = default_hp(10, 2);
  hp.c_min = 0.5;
  hp.c_max = 0.1;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = default_hp(10, 2);
  hp.r_threshold = 1.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = default_hp(10, 20);
  CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("one lamb step on a scalar layer matches the scripted oracle") {
  // After the update m = 0.01 and v = 1e-5, so the gradient must be 0.1.
  HyperParams hp = default_hp(10, 0);
  std::vector<Optimizer::LayerSpec> specs = {{"w", 1}};
  Optimizer opt(OptimizerVariant::kLamb, specs, hp);
  opt.mutable_layers()[0].x[0] = 1.0;
  SimCluster cluster = make_cluster(1, 1, CompressorKind::kIdentity);

  const double g = 0.1;
  const double lr = 0.01;
  StepTrace trace =
      opt.step(single_worker_grads({DenseVector{g}}), 0, lr, cluster);

  // Scripted: m = 0.1*g, v = 0.001*g^2, u = m/(sqrt(v)+eta),
  // c = clip(1/u, 0.01, 0.3) saturates at 0.3 since 1/u ~ 0.3163.
  const double m = 0.1 * g;
  const double v = 0.001 * g * g;
  const double u = m / (std::sqrt(v) + hp.eta);
  const double raw = 1.0 / u;
  CHECK(raw == doctest::Approx(0.31633).epsilon(1e-4));
  CHECK(trace.c[0] == 0.3);
  const double expected_x = 1.0 - lr * 0.3 * u;
  CHECK(opt.layers()[0].x[0] == doctest::Approx(expected_x).epsilon(1e-14));
  CHECK(expected_x == doctest::Approx(0.990516).epsilon(1e-5));
}

TEST_CASE("zero gradient at zero momentum is a fixed point") {
  HyperParams hp = default_hp(4, 0);
  std::vector<Optimizer::LayerSpec> specs = {{"w", 3}};
  Optimizer opt(OptimizerVariant::kLamb, specs, hp);
  opt.mutable_layers()[0].x = DenseVector{1.0, -2.0, 0.5};
  const DenseVector before = opt.layers()[0].x;
  SimCluster cluster = make_cluster(1, 3, CompressorKind::kIdentity);

  StepTrace trace =
      opt.step(single_worker_grads({DenseVector(3)}), 0, 0.01, cluster);
  CHECK(opt.layers()[0].x == before);
  CHECK(trace.c[0] == hp.c_max);  // ||x|| > 0, ||u|| == 0

  // Both norms zero: coefficient defined as clip(1, c_min, c_max).
  Optimizer zero(OptimizerVariant::kLamb, specs, hp);
  SimCluster cluster2 = make_cluster(1, 3, CompressorKind::kIdentity);
  StepTrace tz =
      zero.step(single_worker_grads({DenseVector(3)}), 0, 0.01, cluster2);
  CHECK(tz.c[0] == clip(1.0, hp.c_min, hp.c_max));
  CHECK(zero.layers()[0].x == DenseVector(3));
}

TEST_CASE("degenerate decay factors reduce to sign-like updates") {
  HyperParams hp = default_hp(4, 0);
  hp.beta1 = 0.0;
  hp.beta2 = 0.0;
  std::vector<Optimizer::LayerSpec> specs = {{"w", 2}};
  Optimizer opt(OptimizerVariant::kLamb, specs, hp);
  opt.mutable_layers()[0].x = DenseVector{1.0, 1.0};
  SimCluster cluster = make_cluster(1, 2, CompressorKind::kIdentity);

  const DenseVector g{0.5, -2.0};
  opt.step(single_worker_grads({g}), 0, 0.01, cluster);
  CHECK(opt.layers()[0].m == g);
  CHECK(opt.layers()[0].v == DenseVector{0.25, 4.0});
}

TEST_CASE("warmup tracks the scaling-coefficient moving average") {
  // Huge parameters force c to clip to c_max at every step, so the EMA has
  // the closed form c_max * (1 - beta3^t).
  HyperParams hp = default_hp(10, 5);
  std::vector<Optimizer::LayerSpec> specs = {{"w", 4}};

  SUBCASE("three steps at c = 0.3 give 0.3 * (1 - 0.9^3) = 0.0813") {
    Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
    opt.mutable_layers()[0].x = DenseVector{1e6, 1e6, 1e6, 1e6};
    SimCluster cluster = make_cluster(1, 4, CompressorKind::kIdentity);
    for (std::size_t t = 0; t < 3; ++t) {
      StepTrace trace = opt.step(
          single_worker_grads({DenseVector{0.1, 0.2, -0.1, 0.3}}), t, 1e-6,
          cluster);
      CHECK(trace.c[0] == hp.c_max);
    }
    CHECK(opt.layers()[0].c_avg ==
          doctest::Approx(0.3 * (1.0 - std::pow(0.9, 3))).epsilon(1e-15));
    CHECK(opt.layers()[0].c_avg == doctest::Approx(0.0813).epsilon(1e-12));
  }

  SUBCASE("beta3 = 0 tracks the last coefficient exactly") {
    HyperParams hp0 = hp;
    hp0.beta3 = 0.0;
    Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp0);
    opt.mutable_layers()[0].x = DenseVector{1e6, 1e6, 1e6, 1e6};
    SimCluster cluster = make_cluster(1, 4, CompressorKind::kIdentity);
    StepTrace trace = opt.step(
        single_worker_grads({DenseVector{0.1, 0.2, -0.1, 0.3}}), 0, 1e-6,
        cluster);
    CHECK(opt.layers()[0].c_avg == trace.c[0]);
  }

  SUBCASE("constant coefficient over the full warmup: geometric series") {
    Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
    opt.mutable_layers()[0].x = DenseVector{1e6, 1e6, 1e6, 1e6};
    SimCluster cluster = make_cluster(1, 4, CompressorKind::kIdentity);
    for (std::size_t t = 0; t < hp.warmup_steps; ++t) {
      opt.step(single_worker_grads({DenseVector{0.1, 0.2, -0.1, 0.3}}), t,
               1e-6, cluster);
    }
    CHECK(opt.layers()[0].c_avg ==
          doctest::Approx(0.3 * (1.0 - std::pow(0.9, 5))).epsilon(1e-14));
    CHECK(opt.frozen());
  }
}

TEST_CASE("momentum-recurrence inversion recovers the scalar gradient") {
  // (0.19 - 0.9 * 0.1) / (1 - 0.9) = 1.0
  const double beta1 = 0.9;
  const double m_t = 0.19;
  const double m_prev = 0.1;
  CHECK((m_t - beta1 * m_prev) / (1.0 - beta1) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reconstruction under the identity compressor equals the true "
          "averaged gradient to a few ulps") {
  HyperParams hp = default_hp(4, 1);
  hp.beta2 = 0.0;  // v becomes exactly the squared reconstructed gradient
  std::vector<Optimizer::LayerSpec> specs = {{"w", 8}};
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  SimCluster cluster = make_cluster(1, 8, CompressorKind::kIdentity);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseVector g0(8), g1(8);
  for (std::size_t k = 0; k < 8; ++k) {
    g0[k] = normal(rng);
    g1[k] = normal(rng);
  }
  opt.step(single_worker_grads({g0}), 0, 0.01, cluster);  // warmup + freeze
  opt.step(single_worker_grads({g1}), 1, 0.01, cluster);  // compressed

  // v = g_rec^2, so |g_rec| = sqrt(v). The inversion scales by
  // 1/(1-beta1) = 10, so 4 ulps are measured at the magnitude of the
  // intermediate terms, not of the (possibly cancelling) result.
  const double u = std::ldexp(1.0, -52);
  for (std::size_t k = 0; k < 8; ++k) {
    const double m_prev = 0.1 * g0[k];
    const double m_bar = 0.9 * m_prev + 0.1 * g1[k];
    const double scale =
        10.0 * std::abs(m_bar) + 9.0 * std::abs(m_prev) + std::abs(g1[k]);
    const double g_rec = std::sqrt(opt.layers()[0].v[k]);
    CHECK(std::abs(g_rec - std::abs(g1[k])) <= 4.0 * u * scale);
  }
}

TEST_CASE("ratio clipping steps through relative-then-absolute bounds") {
  // v_frozen = [4, 1], fresh v = [1, 1], r_prev = 1: raw ratio 4.0 is first
  // pulled to 1.1 by the relative bound, then left alone by [0.5, 4].
  HyperParams hp = default_hp(4, 1);
  hp.beta1 = 0.0;  // the averaged momentum equals the gradient
  hp.beta2 = 0.0;  // fresh v equals the reconstructed gradient squared
  std::vector<Optimizer::LayerSpec> specs = {{"w", 2}};
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  opt.mutable_layers()[0].x = DenseVector{1.0, 1.0};
  SimCluster cluster = make_cluster(1, 2, CompressorKind::kIdentity);

  opt.step(single_worker_grads({DenseVector{1.0, 1.0}}), 0, 1e-3, cluster);
  REQUIRE(opt.frozen());

  LayerState& layer = opt.mutable_layers()[0];
  layer.v_frozen = DenseVector{4.0, 1.0};
  layer.r_prev = 1.0;
  layer.c_avg = 0.5;
  const DenseVector x_before = layer.x;

  StepTrace trace =
      opt.step(single_worker_grads({DenseVector{1.0, 1.0}}), 1, 0.01, cluster);

  CHECK(trace.v_ratio_preclip[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(trace.r[0] == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(trace.c[0] == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(opt.layers()[0].r_prev == doctest::Approx(1.1).epsilon(1e-12));

  // Update uses the frozen preconditioner: x -= lr * c * m / (sqrt(vf) + eta).
  const double m = 1.0;  // beta1 = 0 and unit gradients
  CHECK(opt.layers()[0].x[0] ==
        doctest::Approx(x_before[0] - 0.01 * 0.55 * m / (2.0 + hp.eta))
            .epsilon(1e-12));
  CHECK(opt.layers()[0].x[1] ==
        doctest::Approx(x_before[1] - 0.01 * 0.55 * m / (1.0 + hp.eta))
            .epsilon(1e-12));
}

TEST_CASE("compression-stage coefficients obey both clip contracts") {
  HyperParams hp = default_hp(60, 20);
  std::vector<Optimizer::LayerSpec> specs = {{"a", 6}, {"b", 3}};
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  SimCluster cluster = make_cluster(2, 9, CompressorKind::kOneBit);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> prev_r;
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    std::vector<std::vector<DenseVector>> grads(2);
    for (auto& worker : grads) {
      worker.push_back(DenseVector(6));
      worker.push_back(DenseVector(3));
      for (auto& g : worker) {
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = normal(rng);
      }
    }
    StepTrace trace = opt.step(grads, t, 5e-3, cluster);
    for (std::size_t l = 0; l < specs.size(); ++l) {
      if (t < hp.warmup_steps) {
        CHECK(trace.c[l] >= hp.c_min);
        CHECK(trace.c[l] <= hp.c_max);
      } else {
        CHECK(trace.r[l] >= hp.r_min);
        CHECK(trace.r[l] <= hp.r_max);
        CHECK(trace.c[l] >= hp.r_min * opt.layers()[l].c_avg - 1e-15);
        CHECK(trace.c[l] <= hp.r_max * opt.layers()[l].c_avg + 1e-15);
        if (!prev_r.empty()) {
          CHECK(std::abs(trace.r[l] / prev_r[l] - 1.0) <=
                hp.r_threshold + 1e-12);
        }
      }
    }
    if (t >= hp.warmup_steps) prev_r = trace.r;
  }
}

TEST_CASE("frozen variance is bitwise constant through the compression stage") {
  HyperParams hp = default_hp(40, 10);
  std::vector<Optimizer::LayerSpec> specs = {{"w", 5}};
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  SimCluster cluster = make_cluster(2, 5, CompressorKind::kOneBit);

  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseVector snapshot;
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    std::vector<std::vector<DenseVector>> grads(2);
    for (auto& worker : grads) {
      worker.push_back(DenseVector(5));
      for (std::size_t k = 0; k < 5; ++k) worker[0][k] = normal(rng);
    }
    opt.step(grads, t, 1e-3, cluster);
    if (t + 1 == hp.warmup_steps) snapshot = *opt.layers()[0].v_frozen;
    if (t >= hp.warmup_steps) CHECK(*opt.layers()[0].v_frozen == snapshot);
  }
}

TEST_CASE("stage dichotomy: warmup charges baseline bits, compression charges "
          "compressed bits") {
  HyperParams hp = default_hp(12, 5);
  std::vector<Optimizer::LayerSpec> specs = {{"w", 8}};
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  SimCluster cluster = make_cluster(2, 8, CompressorKind::kOneBit);

  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    const VolumeLedger before = cluster.ledger();
    std::vector<std::vector<DenseVector>> grads(2);
    for (auto& worker : grads) {
      worker.push_back(DenseVector(8));
      for (std::size_t k = 0; k < 8; ++k) worker[0][k] = normal(rng);
    }
    opt.step(grads, t, 1e-3, cluster);
    const VolumeLedger after = cluster.ledger();
    if (t < hp.warmup_steps) {
      CHECK(after.lossless_bits > before.lossless_bits);
      CHECK(after.gather_bits == before.gather_bits);
    } else {
      CHECK(after.lossless_bits == before.lossless_bits);
      CHECK(after.gather_bits > before.gather_bits);
      CHECK(after.scatter_bits > before.scatter_bits);
    }
  }
  CHECK(cluster.ledger().lossless_collectives == hp.warmup_steps);
  CHECK(cluster.ledger().compressed_collectives ==
        hp.total_steps - hp.warmup_steps);
}

TEST_CASE("one fused collective per compression step regardless of layer "
          "count") {
  // 302 layers of mixed small sizes: still exactly one message per step.
  std::vector<Optimizer::LayerSpec> specs;
  std::size_t dim = 0;
  for (int l = 0; l < 302; ++l) {
    const std::size_t size = 1 + static_cast<std::size_t>(l % 5);
    specs.push_back({"layer" + std::to_string(l), size});
    dim += size;
  }
  HyperParams hp = default_hp(6, 2);
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  SimCluster cluster = make_cluster(2, dim, CompressorKind::kOneBit);

  std::mt19937_64 rng(37);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    std::vector<std::vector<DenseVector>> grads(2);
    for (auto& worker : grads) {
      for (const auto& spec : specs) {
        DenseVector g(spec.size);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = normal(rng);
        worker.push_back(std::move(g));
      }
    }
    opt.step(grads, t, 1e-3, cluster);
  }
  CHECK(cluster.ledger().compressed_collectives ==
        hp.total_steps - hp.warmup_steps);
  CHECK(cluster.ledger().lossless_collectives == hp.warmup_steps);
}

TEST_CASE("lossless collapse: distributed two-stage runs match the sequential "
          "reference") {
  const std::vector<Optimizer::LayerSpec> specs = {{"a", 5}, {"b", 9}};
  const std::size_t dim = 14;
  HyperParams hp = default_hp(120, 40);

  for (int n : {1, 2, 4, 8}) {
    Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
    std::mt19937_64 init_rng(91);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> x0;
    for (std::size_t l = 0; l < specs.size(); ++l) {
      std::vector<double> x(specs[l].size);
      for (double& e : x) e = normal(init_rng);
      x0.push_back(x);
      for (std::size_t k = 0; k < x.size(); ++k) {
        opt.mutable_layers()[l].x[k] = x[k];
      }
    }
    bitlamb_test::RefParams rp;
    rp.warmup_steps = hp.warmup_steps;
    bitlamb_test::ReferenceOneBitLamb ref(x0, rp);

    SimCluster cluster = make_cluster(n, dim, CompressorKind::kIdentity);
    std::mt19937_64 rng(1234);
    for (std::size_t t = 0; t < hp.total_steps; ++t) {
      std::vector<std::vector<DenseVector>> grads(
          static_cast<std::size_t>(n));
      std::vector<std::vector<double>> mean(specs.size());
      for (std::size_t l = 0; l < specs.size(); ++l) {
        mean[l].assign(specs[l].size, 0.0);
      }
      for (auto& worker : grads) {
        for (std::size_t l = 0; l < specs.size(); ++l) {
          DenseVector g(specs[l].size);
          for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] = normal(rng);
            mean[l][k] += g[k];
          }
          worker.push_back(std::move(g));
        }
      }
      for (auto& layer : mean) {
        for (double& e : layer) e /= n;
      }
      opt.step(grads, t, 2e-3, cluster);
      ref.step(mean, t, 2e-3);

      for (std::size_t l = 0; l < specs.size(); ++l) {
        for (std::size_t k = 0; k < specs[l].size; ++k) {
          const double a = opt.layers()[l].x[k];
          const double b = ref.params()[l][k];
          CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)));
        }
      }
    }
  }
}

TEST_CASE("basic-1bit equals 1-bit LAMB when the ratio is forced to one") {
  const std::vector<Optimizer::LayerSpec> specs = {{"a", 4}, {"b", 7}};
  HyperParams forced = default_hp(50, 15);
  forced.r_min = 1.0;
  forced.r_max = 1.0;
  HyperParams basic_hp = default_hp(50, 15);

  Optimizer forced_opt(OptimizerVariant::kOneBitLamb, specs, forced);
  Optimizer basic_opt(OptimizerVariant::kLambBasicOneBit, specs, basic_hp);
  SimCluster cluster_a = make_cluster(2, 11, CompressorKind::kOneBit);
  SimCluster cluster_b = make_cluster(2, 11, CompressorKind::kOneBit);

  std::mt19937_64 rng(47);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = 0; t < 50; ++t) {
    std::vector<std::vector<DenseVector>> grads(2);
    for (auto& worker : grads) {
      worker.push_back(DenseVector(4));
      worker.push_back(DenseVector(7));
      for (auto& g : worker) {
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = normal(rng);
      }
    }
    forced_opt.step(grads, t, 1e-3, cluster_a);
    basic_opt.step(grads, t, 1e-3, cluster_b);
    for (std::size_t l = 0; l < specs.size(); ++l) {
      CHECK(forced_opt.layers()[l].x == basic_opt.layers()[l].x);
    }
  }
}

TEST_CASE("basic-1bit under the identity compressor is momentum SGD with a "
          "fixed preconditioner and rate c_avg") {
  const std::vector<Optimizer::LayerSpec> specs = {{"w", 5}};
  HyperParams hp = default_hp(40, 10);
  Optimizer opt(OptimizerVariant::kLambBasicOneBit, specs, hp);
  SimCluster cluster = make_cluster(1, 5, CompressorKind::kIdentity);

  std::mt19937_64 rng(83);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double lr = 3e-3;

  // Scripted shadow of the compression stage.
  std::vector<double> sm(5), sx(5), sv_frozen(5);
  double c_avg = 0.0;
  bool captured = false;
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    DenseVector g(5);
    for (std::size_t k = 0; k < 5; ++k) g[k] = normal(rng);
    if (t >= hp.warmup_steps) {
      // momentum SGD with the frozen diagonal preconditioner
      for (std::size_t k = 0; k < 5; ++k) {
        sm[k] = hp.beta1 * sm[k] + (1.0 - hp.beta1) * g[k];
        sx[k] -= lr * c_avg * sm[k] / (std::sqrt(sv_frozen[k]) + hp.eta);
      }
    }
    opt.step(single_worker_grads({g}), t, lr, cluster);
    if (!captured && t + 1 == hp.warmup_steps) {
      for (std::size_t k = 0; k < 5; ++k) {
        sm[k] = opt.layers()[0].m[k];
        sx[k] = opt.layers()[0].x[k];
        sv_frozen[k] = (*opt.layers()[0].v_frozen)[k];
      }
      c_avg = opt.layers()[0].c_avg;
      captured = true;
    }
    if (t >= hp.warmup_steps) {
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(opt.layers()[0].x[k] ==
              doctest::Approx(sx[k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("frozen-variance adam matches its sequential oracle under the "
          "identity compressor") {
  const std::vector<Optimizer::LayerSpec> specs = {{"w", 6}};
  HyperParams hp = default_hp(60, 20);

  Optimizer opt(OptimizerVariant::kOneBitAdam, specs, hp);
  bitlamb_test::RefParams rp;
  rp.warmup_steps = hp.warmup_steps;
  bitlamb_test::ReferenceOneBitAdam ref({std::vector<double>(6, 0.0)}, rp);
  SimCluster cluster = make_cluster(2, 6, CompressorKind::kIdentity);

  std::mt19937_64 rng(53);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    std::vector<std::vector<DenseVector>> grads(2);
    std::vector<std::vector<double>> mean = {std::vector<double>(6, 0.0)};
    for (auto& worker : grads) {
      worker.push_back(DenseVector(6));
      for (std::size_t k = 0; k < 6; ++k) {
        worker[0][k] = normal(rng);
        mean[0][k] += worker[0][k] / 2.0;
      }
    }
    opt.step(grads, t, 1e-3, cluster);
    ref.step(mean, t, 1e-3);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(std::abs(opt.layers()[0].x[k] - ref.params()[0][k]) <=
            1e-10 * std::max(1.0, std::abs(ref.params()[0][k])));
    }
  }
}

TEST_CASE("adam warmup on a scalar quadratic matches the hand-iterated "
          "recurrence") {
  HyperParams hp = default_hp(20, 20);  // all warmup: plain adam
  std::vector<Optimizer::LayerSpec> specs = {{"w", 1}};
  Optimizer opt(OptimizerVariant::kOneBitAdam, specs, hp);
  opt.mutable_layers()[0].x[0] = 2.0;
  SimCluster cluster = make_cluster(1, 1, CompressorKind::kIdentity);

  double x = 2.0, m = 0.0, v = 0.0;
  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    const double g = x - 0.5;  // d/dx 0.5*(x-0.5)^2
    opt.step(single_worker_grads({DenseVector{g}}), t, 0.05, cluster);
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
    x -= 0.05 * m / (std::sqrt(v) + hp.eta);
    CHECK(opt.layers()[0].x[0] == doctest::Approx(x).epsilon(1e-14));
  }
  // T_w = T never enters the compression stage
  CHECK(cluster.ledger().compressed_collectives == 0);
}

TEST_CASE("lamb descends monotonically on a convex quadratic after burn-in") {
  const std::size_t d = 12;
  std::vector<Optimizer::LayerSpec> specs = {{"w", d}};
  HyperParams hp = default_hp(200, 0);
  Optimizer opt(OptimizerVariant::kLamb, specs, hp);
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> uni(0.5, 4.0);
  DenseVector curvature(d), target(d);
  for (std::size_t k = 0; k < d; ++k) {
    curvature[k] = uni(rng);
    target[k] = uni(rng) - 2.0;
    opt.mutable_layers()[0].x[k] = uni(rng);
  }
  SimCluster cluster = make_cluster(1, d, CompressorKind::kIdentity);

  auto loss = [&]() {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double r = opt.layers()[0].x[k] - target[k];
      acc += 0.5 * curvature[k] * r * r;
    }
    return acc;
  };

  double prev = loss();
  for (std::size_t t = 0; t < 200; ++t) {
    DenseVector g(d);
    for (std::size_t k = 0; k < d; ++k) {
      g[k] = curvature[k] * (opt.layers()[0].x[k] - target[k]);
    }
    opt.step(single_worker_grads({g}), t, 1e-3, cluster);
    const double now = loss();
    if (t >= 10) CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("the experimental scaled-residual carry is selectable and stays "
          "stable") {
  // With the flag on, the carried residual is multiplied by the ratio of the
  // last two mean scaling coefficients before compression. The trajectories
  // must differ from the standard carry but remain finite and bounded.
  const std::vector<Optimizer::LayerSpec> specs = {{"w", 9}};
  HyperParams plain_hp = default_hp(80, 20);
  HyperParams scaled_hp = plain_hp;
  scaled_hp.scaled_error_feedback = true;

  Optimizer plain(OptimizerVariant::kOneBitLamb, specs, plain_hp);
  Optimizer scaled(OptimizerVariant::kOneBitLamb, specs, scaled_hp);
  SimCluster cluster_a = make_cluster(2, 9, CompressorKind::kOneBit);
  SimCluster cluster_b = make_cluster(2, 9, CompressorKind::kOneBit);

  std::mt19937_64 rng(71);
  std::normal_distribution<double> normal(0.0, 1.0);
  bool diverged_paths = false;
  for (std::size_t t = 0; t < 80; ++t) {
    std::vector<std::vector<DenseVector>> grads(2);
    for (auto& worker : grads) {
      worker.push_back(DenseVector(9));
      for (std::size_t k = 0; k < 9; ++k) worker[0][k] = normal(rng);
    }
    plain.step(grads, t, 2e-3, cluster_a);
    scaled.step(grads, t, 2e-3, cluster_b);
    CHECK(all_finite(scaled.layers()[0].x));
    if (plain.layers()[0].x != scaled.layers()[0].x) diverged_paths = true;
  }
  CHECK(diverged_paths);
}

TEST_CASE("errors: non-finite gradients, stage order, worker counts") {
  std::vector<Optimizer::LayerSpec> specs = {{"w", 2}};
  HyperParams hp = default_hp(10, 0);  // no warmup
  Optimizer opt(OptimizerVariant::kOneBitLamb, specs, hp);
  SimCluster cluster = make_cluster(1, 2, CompressorKind::kOneBit);

  // warmup_steps = 0 means the frozen state never exists
  CHECK_THROWS_AS(
      opt.step(single_worker_grads({DenseVector{1.0, 1.0}}), 0, 0.01, cluster),
      StageOrderError);

  Optimizer lamb(OptimizerVariant::kLamb, specs, hp);
  DenseVector bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(lamb.step(single_worker_grads({bad}), 0, 0.01, cluster),
                  std::runtime_error);
}
