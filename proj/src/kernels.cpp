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

#include "bitlamb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace bitlamb::kernels {

namespace serial {

double sum(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

double sum_abs(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

double sum_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_ratio(std::span<const double> a, std::span<const double> b,
                     double floor) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i]) / std::max(b[i], floor));
  }
  return m;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void axpby(std::span<double> y, double a, double b,
           std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a * y[i] + b * x[i];
}

void axpby_square(std::span<double> y, double a, double b,
                  std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a * y[i] + b * x[i] * x[i];
}

void linear_combine(std::span<double> dst, double a, std::span<const double> x,
                    double b, std::span<const double> y) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a * x[i] + b * y[i];
}

void precondition(std::span<double> dst, std::span<const double> m,
                  std::span<const double> v, double eta) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = m[i] / (std::sqrt(v[i]) + eta);
  }
}

void scale(std::span<double> v, double a) {
  for (double& x : v) x *= a;
}

void add(std::span<double> dst, std::span<const double> x,
         std::span<const double> y) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = x[i] + y[i];
}

void subtract(std::span<double> dst, std::span<const double> x,
              std::span<const double> y) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = x[i] - y[i];
}

void square_into(std::span<double> dst, std::span<const double> x) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = x[i] * x[i];
}

void sqrt_into(std::span<double> dst, std::span<const double> x) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::sqrt(x[i]);
}

void divide_into(std::span<double> dst, std::span<const double> x,
                 std::span<const double> y) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = x[i] / y[i];
}

void copy(std::span<double> dst, std::span<const double> src) {
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace serial

namespace {

// Sum-style reductions accumulate per fixed-size block and combine the block
// partials in index order, so results are independent of the thread count.
constexpr std::size_t kReduceBlock = 4096;
// Below this size the parallel-for overhead is not worth paying.
constexpr std::size_t kParallelGrain = 2048;

template <typename BlockFn>
double blocked_sum(std::size_t n, BlockFn&& block_fn) {
  if (n <= kReduceBlock) return block_fn(0, n);
  const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partials(nblocks);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, n);
    partials[static_cast<std::size_t>(b)] = block_fn(lo, hi);
  }
  double acc = 0.0;
  for (double p : partials) acc += p;
  return acc;
}

}  // namespace

double sum(std::span<const double> v) {
  return blocked_sum(v.size(), [&](std::size_t lo, std::size_t hi) {
    return serial::sum(v.subspan(lo, hi - lo));
  });
}

double sum_abs(std::span<const double> v) {
  return blocked_sum(v.size(), [&](std::size_t lo, std::size_t hi) {
    return serial::sum_abs(v.subspan(lo, hi - lo));
  });
}

double sum_squares(std::span<const double> v) {
  return blocked_sum(v.size(), [&](std::size_t lo, std::size_t hi) {
    return serial::sum_squares(v.subspan(lo, hi - lo));
  });
}

double max_abs(std::span<const double> v) {
  if (v.size() < kParallelGrain) return serial::max_abs(v);
  double m = 0.0;
  const std::int64_t n = static_cast<std::int64_t>(v.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) reduction(max : m)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    m = std::max(m, std::abs(v[static_cast<std::size_t>(i)]));
  }
  return m;
}

double max_abs_ratio(std::span<const double> a, std::span<const double> b,
                     double floor) {
  if (a.size() < kParallelGrain) return serial::max_abs_ratio(a, b, floor);
  double m = 0.0;
  const std::int64_t n = static_cast<std::int64_t>(a.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) reduction(max : m)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    m = std::max(m, std::abs(a[k]) / std::max(b[k], floor));
  }
  return m;
}

bool all_finite(std::span<const double> v) {
  if (v.size() < kParallelGrain) return serial::all_finite(v);
  int ok = 1;
  const std::int64_t n = static_cast<std::int64_t>(v.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) reduction(&& : ok)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    ok = ok && std::isfinite(v[static_cast<std::size_t>(i)]);
  }
  return ok != 0;
}

// Elementwise maps: each output element depends only on the same index of the
// inputs, so the OpenMP and serial variants are bit-identical.

#if defined(_OPENMP)
#define BITLAMB_PRAGMA(directive) _Pragma(#directive)
#define BITLAMB_MAP_LOOP(N)                                                  \
  BITLAMB_PRAGMA(omp parallel for schedule(static) if ((N) >= kParallelGrain)) \
  for (std::int64_t i_ = 0; i_ < static_cast<std::int64_t>(N); ++i_)
#else
#define BITLAMB_MAP_LOOP(N) \
  for (std::int64_t i_ = 0; i_ < static_cast<std::int64_t>(N); ++i_)
#endif

void axpy(std::span<double> y, double a, std::span<const double> x) {
  BITLAMB_MAP_LOOP(y.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    y[i] += a * x[i];
  }
}

void axpby(std::span<double> y, double a, double b,
           std::span<const double> x) {
  BITLAMB_MAP_LOOP(y.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    y[i] = a * y[i] + b * x[i];
  }
}

void axpby_square(std::span<double> y, double a, double b,
                  std::span<const double> x) {
  BITLAMB_MAP_LOOP(y.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    y[i] = a * y[i] + b * x[i] * x[i];
  }
}

void linear_combine(std::span<double> dst, double a, std::span<const double> x,
                    double b, std::span<const double> y) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = a * x[i] + b * y[i];
  }
}

void precondition(std::span<double> dst, std::span<const double> m,
                  std::span<const double> v, double eta) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = m[i] / (std::sqrt(v[i]) + eta);
  }
}

void scale(std::span<double> v, double a) {
  BITLAMB_MAP_LOOP(v.size()) { v[static_cast<std::size_t>(i_)] *= a; }
}

void add(std::span<double> dst, std::span<const double> x,
         std::span<const double> y) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = x[i] + y[i];
  }
}

void subtract(std::span<double> dst, std::span<const double> x,
              std::span<const double> y) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = x[i] - y[i];
  }
}

void square_into(std::span<double> dst, std::span<const double> x) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = x[i] * x[i];
  }
}

void sqrt_into(std::span<double> dst, std::span<const double> x) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = std::sqrt(x[i]);
  }
}

void divide_into(std::span<double> dst, std::span<const double> x,
                 std::span<const double> y) {
  BITLAMB_MAP_LOOP(dst.size()) {
    const std::size_t i = static_cast<std::size_t>(i_);
    dst[i] = x[i] / y[i];
  }
}

void copy(std::span<double> dst, std::span<const double> src) {
  std::copy(src.begin(), src.end(), dst.begin());
}

#undef BITLAMB_MAP_LOOP

}  // namespace bitlamb::kernels
