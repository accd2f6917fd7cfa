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

// Compares the OpenMP kernels against the serial reference across sizes.
// Build and run:  ./bitlamb_bench [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "bitlamb/compression.hpp"
#include "bitlamb/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_per_call(int repeats, const auto& fn) {
  // One warm call, then time the batch.
  fn();
  const auto start = Clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  return std::chrono::duration<double>(Clock::now() - start).count() / repeats;
}

volatile double g_sink = 0.0;

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 200;
  std::printf("%-22s %-12s %-12s %-12s %-8s\n", "kernel", "n", "serial_s",
              "openmp_s", "speedup");

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t n : {1u << 12, 1u << 16, 1u << 20, 1u << 22}) {
    std::vector<double> a(n), b(n), out(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = normal(rng);
      b[i] = std::abs(normal(rng)) + 1e-3;
    }

    const double t_sum_ser = seconds_per_call(
        repeats, [&] { g_sink = bitlamb::kernels::serial::sum_squares(a); });
    const double t_sum_par = seconds_per_call(
        repeats, [&] { g_sink = bitlamb::kernels::sum_squares(a); });
    std::printf("%-22s %-12zu %-12.3e %-12.3e %-8.2f\n", "sum_squares", n,
                t_sum_ser, t_sum_par, t_sum_ser / t_sum_par);

    const double t_pre_ser = seconds_per_call(repeats, [&] {
      bitlamb::kernels::serial::precondition(out, a, b, 1e-6);
    });
    const double t_pre_par = seconds_per_call(
        repeats, [&] { bitlamb::kernels::precondition(out, a, b, 1e-6); });
    std::printf("%-22s %-12zu %-12.3e %-12.3e %-8.2f\n", "precondition", n,
                t_pre_ser, t_pre_par, t_pre_ser / t_pre_par);

    const double t_axpby_ser = seconds_per_call(repeats, [&] {
      bitlamb::kernels::serial::axpby(out, 0.9, 0.1, a);
    });
    const double t_axpby_par = seconds_per_call(
        repeats, [&] { bitlamb::kernels::axpby(out, 0.9, 0.1, a); });
    std::printf("%-22s %-12zu %-12.3e %-12.3e %-8.2f\n", "axpby", n,
                t_axpby_ser, t_axpby_par, t_axpby_ser / t_axpby_par);

    const double t_cmp = seconds_per_call(repeats, [&] {
      g_sink = bitlamb::CompressedBlock::compress(a).scale();
    });
    std::printf("%-22s %-12zu %-12s %-12.3e %-8s\n", "compress_1bit", n, "-",
                t_cmp, "-");
  }
  return 0;
}
