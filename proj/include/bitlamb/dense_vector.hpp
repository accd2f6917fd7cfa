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

#ifndef BITLAMB_DENSE_VECTOR_HPP_
#define BITLAMB_DENSE_VECTOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace bitlamb {

/// Flat array of 64-bit reals. The universal carrier for parameters,
/// gradients, momenta, variances and error-feedback residuals.
///
/// The length is fixed at construction; elements are mutable.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  DenseVector(std::initializer_list<double> init) : values_(init) {}
  explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {}
  explicit DenseVector(std::span<const double> values)
      : values_(values.begin(), values.end()) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  operator std::span<double>() { return values_; }
  operator std::span<const double>() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  void fill(double v) { values_.assign(values_.size(), v); }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> values_;
};

}  // namespace bitlamb

#endif  // BITLAMB_DENSE_VECTOR_HPP_
