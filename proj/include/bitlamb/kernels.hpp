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

#ifndef BITLAMB_KERNELS_HPP_
#define BITLAMB_KERNELS_HPP_

#include <cstddef>
#include <span>

// Flat-vector kernels, provided twice:
//
//   kernels::serial — straight-loop reference implementations, kept for
//                     testing and as the ground truth for the benchmark.
//   kernels::       — OpenMP variants used by the library.
//
// Maps are elementwise and produce bit-identical results in both variants.
// Sum-style reductions in the OpenMP variant accumulate over fixed-size
// blocks combined in block order, so the result does not depend on the
// thread count; it may differ from the serial reference by normal
// floating-point reassociation.
namespace bitlamb::kernels {

namespace serial {

double sum(std::span<const double> v);
double sum_abs(std::span<const double> v);
double sum_squares(std::span<const double> v);
double max_abs(std::span<const double> v);
// max over i of |a[i]| / max(b[i], floor)
double max_abs_ratio(std::span<const double> a, std::span<const double> b,
                     double floor);
bool all_finite(std::span<const double> v);

// y += a * x
void axpy(std::span<double> y, double a, std::span<const double> x);
// y = a*y + b*x
void axpby(std::span<double> y, double a, double b, std::span<const double> x);
// y = a*y + b*x.^2
void axpby_square(std::span<double> y, double a, double b,
                  std::span<const double> x);
// dst = a*x + b*y
void linear_combine(std::span<double> dst, double a, std::span<const double> x,
                    double b, std::span<const double> y);
// dst = m ./ (sqrt(v) + eta)
void precondition(std::span<double> dst, std::span<const double> m,
                  std::span<const double> v, double eta);
void scale(std::span<double> v, double a);
void add(std::span<double> dst, std::span<const double> x,
         std::span<const double> y);
void subtract(std::span<double> dst, std::span<const double> x,
              std::span<const double> y);
void square_into(std::span<double> dst, std::span<const double> x);
void sqrt_into(std::span<double> dst, std::span<const double> x);
void divide_into(std::span<double> dst, std::span<const double> x,
                 std::span<const double> y);
void copy(std::span<double> dst, std::span<const double> src);

}  // namespace serial

double sum(std::span<const double> v);
double sum_abs(std::span<const double> v);
double sum_squares(std::span<const double> v);
double max_abs(std::span<const double> v);
double max_abs_ratio(std::span<const double> a, std::span<const double> b,
                     double floor);
bool all_finite(std::span<const double> v);

void axpy(std::span<double> y, double a, std::span<const double> x);
void axpby(std::span<double> y, double a, double b, std::span<const double> x);
void axpby_square(std::span<double> y, double a, double b,
                  std::span<const double> x);
void linear_combine(std::span<double> dst, double a, std::span<const double> x,
                    double b, std::span<const double> y);
void precondition(std::span<double> dst, std::span<const double> m,
                  std::span<const double> v, double eta);
void scale(std::span<double> v, double a);
void add(std::span<double> dst, std::span<const double> x,
         std::span<const double> y);
void subtract(std::span<double> dst, std::span<const double> x,
              std::span<const double> y);
void square_into(std::span<double> dst, std::span<const double> x);
void sqrt_into(std::span<double> dst, std::span<const double> x);
void divide_into(std::span<double> dst, std::span<const double> x,
                 std::span<const double> y);
void copy(std::span<double> dst, std::span<const double> src);

}  // namespace bitlamb::kernels

#endif  // BITLAMB_KERNELS_HPP_
