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

#include "bitlamb/fusion.hpp"

#include <algorithm>

#include "bitlamb/errors.hpp"
#include "bitlamb/kernels.hpp"
#include "bitlamb/vector_ops.hpp"

namespace bitlamb {

FusedLayout FusedLayout::from_lengths(std::span<const std::size_t> lengths) {
  FusedLayout layout;
  layout.segments.reserve(lengths.size());
  std::size_t offset = 0;
  for (std::size_t len : lengths) {
    layout.segments.push_back({offset, len});
    offset += len;
  }
  layout.total = offset;
  return layout;
}

std::span<double> FusedLayout::view(DenseVector& buffer, std::size_t l) const {
  check_same_size(buffer.size(), total, "FusedLayout::view");
  const auto& seg = segments.at(l);
  return buffer.span().subspan(seg.offset, seg.length);
}

std::span<const double> FusedLayout::view(const DenseVector& buffer,
                                          std::size_t l) const {
  check_same_size(buffer.size(), total, "FusedLayout::view");
  const auto& seg = segments.at(l);
  return buffer.span().subspan(seg.offset, seg.length);
}

FusedBuffer::FusedBuffer(const FusedLayout& layout)
    : layout_(layout), buffer_(layout.total) {}

std::span<double> FusedBuffer::layer(std::size_t l) {
  const auto& seg = layout_.segments.at(l);
  return buffer_.span().subspan(seg.offset, seg.length);
}

std::span<const double> FusedBuffer::layer(std::size_t l) const {
  const auto& seg = layout_.segments.at(l);
  return buffer_.span().subspan(seg.offset, seg.length);
}

void FusedBuffer::gather(std::span<const DenseVector> layers) {
  check_same_size(layers.size(), layout_.layer_count(), "fuse: layer count");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    check_same_size(layers[l].size(), layout_.segments[l].length,
                    "fuse: layer length");
    kernels::copy(layer(l), layers[l]);
  }
}

void FusedBuffer::scatter(std::span<DenseVector> layers) const {
  check_same_size(layers.size(), layout_.layer_count(), "unfuse: layer count");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    check_same_size(layers[l].size(), layout_.segments[l].length,
                    "unfuse: layer length");
    kernels::copy(layers[l].span(), layer(l));
  }
}

FusedBuffer fuse(std::span<const DenseVector> layers) {
  std::vector<std::size_t> lengths(layers.size());
  std::transform(layers.begin(), layers.end(), lengths.begin(),
                 [](const DenseVector& v) { return v.size(); });
  FusedBuffer fused(FusedLayout::from_lengths(lengths));
  fused.gather(layers);
  return fused;
}

std::vector<DenseVector> unfuse(const FusedBuffer& fused) {
  std::vector<DenseVector> layers;
  layers.reserve(fused.layout().layer_count());
  for (std::size_t l = 0; l < fused.layout().layer_count(); ++l) {
    layers.emplace_back(std::span<const double>(fused.layer(l)));
  }
  return layers;
}

MomentumScales MomentumScales::uniform(std::size_t layer_count) {
  MomentumScales scales;
  scales.coeff.assign(layer_count, 1.0);
  scales.reference_scale = 1.0;
  return scales;
}

MomentumScales compute_scales(std::span<const DenseVector> momenta,
                              double floor) {
  check_arg(!momenta.empty(), "compute_scales: no layers");
  check_arg(floor > 0.0, "compute_scales: floor must be positive");
  MomentumScales scales;
  std::vector<double> magnitude(momenta.size());
  for (std::size_t l = 0; l < momenta.size(); ++l) {
    magnitude[l] = std::max(mean_abs(momenta[l]), floor);
  }
  double ref = 0.0;
  for (double s : magnitude) ref += s;
  ref /= static_cast<double>(magnitude.size());
  scales.reference_scale = ref;
  scales.coeff.resize(momenta.size());
  for (std::size_t l = 0; l < momenta.size(); ++l) {
    scales.coeff[l] = ref / magnitude[l];
  }
  return scales;
}

void apply_scaling(DenseVector& fused, const FusedLayout& layout,
                   const MomentumScales& scales) {
  check_same_size(scales.coeff.size(), layout.layer_count(), "apply_scaling");
  for (std::size_t l = 0; l < scales.coeff.size(); ++l) {
    kernels::scale(layout.view(fused, l), scales.coeff[l]);
  }
}

void apply_scaling(FusedBuffer& fused, const MomentumScales& scales) {
  apply_scaling(fused.buffer(), fused.layout(), scales);
}

void remove_scaling(DenseVector& fused, const FusedLayout& layout,
                    const MomentumScales& scales) {
  check_same_size(scales.coeff.size(), layout.layer_count(), "remove_scaling");
  for (std::size_t l = 0; l < scales.coeff.size(); ++l) {
    kernels::scale(layout.view(fused, l), 1.0 / scales.coeff[l]);
  }
}

void remove_scaling(FusedBuffer& fused, const MomentumScales& scales) {
  remove_scaling(fused.buffer(), fused.layout(), scales);
}

}  // namespace bitlamb
