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

#include "bitlamb/vector_ops.hpp"

#include <cmath>

#include "bitlamb/errors.hpp"
#include "bitlamb/kernels.hpp"

namespace bitlamb {

double clip(double x, double a, double b) {
  check_arg(a <= b, "clip: invalid bounds, lower bound exceeds upper bound");
  return std::min(std::max(x, a), b);
}

double l2_norm(const DenseVector& v) { return std::sqrt(kernels::sum_squares(v)); }

double inf_norm_of_ratio(const DenseVector& a, const DenseVector& b,
                         double floor) {
  check_same_size(a.size(), b.size(), "inf_norm_of_ratio");
  check_arg(floor > 0.0, "inf_norm_of_ratio: floor must be positive");
  return kernels::max_abs_ratio(a, b, floor);
}

double max_abs(const DenseVector& v) { return kernels::max_abs(v); }

double mean_abs(const DenseVector& v) {
  if (v.empty()) return 0.0;
  return kernels::sum_abs(v) / static_cast<double>(v.size());
}

bool all_finite(const DenseVector& v) { return kernels::all_finite(v); }

void axpy(DenseVector& y, double a, const DenseVector& x) {
  check_same_size(y.size(), x.size(), "axpy");
  kernels::axpy(y, a, x);
}

void axpby(DenseVector& y, double a, double b, const DenseVector& x) {
  check_same_size(y.size(), x.size(), "axpby");
  kernels::axpby(y, a, b, x);
}

void axpby_square(DenseVector& y, double a, double b, const DenseVector& x) {
  check_same_size(y.size(), x.size(), "axpby_square");
  kernels::axpby_square(y, a, b, x);
}

void scale(DenseVector& v, double a) { kernels::scale(v, a); }

DenseVector add(const DenseVector& x, const DenseVector& y) {
  check_same_size(x.size(), y.size(), "add");
  DenseVector out(x.size());
  kernels::add(out, x, y);
  return out;
}

DenseVector subtract(const DenseVector& x, const DenseVector& y) {
  check_same_size(x.size(), y.size(), "subtract");
  DenseVector out(x.size());
  kernels::subtract(out, x, y);
  return out;
}

DenseVector elementwise_square(const DenseVector& x) {
  DenseVector out(x.size());
  kernels::square_into(out, x);
  return out;
}

DenseVector elementwise_sqrt(const DenseVector& x) {
  DenseVector out(x.size());
  kernels::sqrt_into(out, x);
  return out;
}

DenseVector elementwise_divide(const DenseVector& x, const DenseVector& y) {
  check_same_size(x.size(), y.size(), "elementwise_divide");
  DenseVector out(x.size());
  kernels::divide_into(out, x, y);
  return out;
}

}  // namespace bitlamb
