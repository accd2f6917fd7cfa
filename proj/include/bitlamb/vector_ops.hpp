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

#ifndef BITLAMB_VECTOR_OPS_HPP_
#define BITLAMB_VECTOR_OPS_HPP_

#include "bitlamb/dense_vector.hpp"

namespace bitlamb {

/// clip(x, a, b) := min{max{x, a}, b}. Throws std::invalid_argument if a > b.
double clip(double x, double a, double b);

/// Euclidean norm. Zero iff v is the zero vector.
double l2_norm(const DenseVector& v);

/// max over i of |a[i]| / max(b[i], floor). Denominator elements are
/// lower-bounded by `floor` before dividing; floor must be positive.
/// Throws DimensionError on length mismatch.
double inf_norm_of_ratio(const DenseVector& a, const DenseVector& b,
                         double floor);

double max_abs(const DenseVector& v);
double mean_abs(const DenseVector& v);
bool all_finite(const DenseVector& v);

/// y += a * x
void axpy(DenseVector& y, double a, const DenseVector& x);
/// y = a*y + b*x
void axpby(DenseVector& y, double a, double b, const DenseVector& x);
/// y = a*y + b*x.^2
void axpby_square(DenseVector& y, double a, double b, const DenseVector& x);
void scale(DenseVector& v, double a);
DenseVector add(const DenseVector& x, const DenseVector& y);
DenseVector subtract(const DenseVector& x, const DenseVector& y);
DenseVector elementwise_square(const DenseVector& x);
DenseVector elementwise_sqrt(const DenseVector& x);
DenseVector elementwise_divide(const DenseVector& x, const DenseVector& y);

}  // namespace bitlamb

#endif  // BITLAMB_VECTOR_OPS_HPP_
