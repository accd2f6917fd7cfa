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

#ifndef BITLAMB_FUSION_HPP_
#define BITLAMB_FUSION_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "bitlamb/dense_vector.hpp"

namespace bitlamb {

/// Contiguous, non-overlapping placement of per-layer vectors inside one
/// fused 1D buffer, in registration order.
struct FusedLayout {
  struct Segment {
    std::size_t offset = 0;
    std::size_t length = 0;
  };

  std::vector<Segment> segments;
  std::size_t total = 0;

  static FusedLayout from_lengths(std::span<const std::size_t> lengths);
  std::size_t layer_count() const { return segments.size(); }

  /// Aliasing view of layer l inside a buffer laid out by this layout.
  std::span<double> view(DenseVector& buffer, std::size_t l) const;
  std::span<const double> view(const DenseVector& buffer, std::size_t l) const;
};

/// One contiguous buffer holding every layer's values; per-layer access is a
/// span aliasing the buffer, so writes through either view are visible to the
/// other.
class FusedBuffer {
 public:
  FusedBuffer() = default;
  explicit FusedBuffer(const FusedLayout& layout);

  std::span<double> layer(std::size_t l);
  std::span<const double> layer(std::size_t l) const;

  DenseVector& buffer() { return buffer_; }
  const DenseVector& buffer() const { return buffer_; }
  const FusedLayout& layout() const { return layout_; }
  std::size_t size() const { return buffer_.size(); }

  /// Copies each per-layer vector into its segment. Layer count and lengths
  /// must match the layout.
  void gather(std::span<const DenseVector> layers);
  /// Copies each segment back out to the per-layer vectors.
  void scatter(std::span<DenseVector> layers) const;

 private:
  FusedLayout layout_;
  DenseVector buffer_;
};

/// Fuses per-layer vectors into one contiguous buffer (single collective per
/// step instead of one per layer).
FusedBuffer fuse(std::span<const DenseVector> layers);

/// Round-trip inverse of fuse.
std::vector<DenseVector> unfuse(const FusedBuffer& fused);

/// Fixed per-layer multipliers that equalize momentum magnitudes before
/// shared-scale 1-bit compression. Computed once at the end of warmup and
/// held constant through the compression stage.
struct MomentumScales {
  std::vector<double> coeff;    // one per layer, > 0
  double reference_scale = 1.0; // mean over layers of the per-layer magnitude

  static MomentumScales uniform(std::size_t layer_count);
};

/// Per-layer magnitude s_l = mean(|m_l|) floored at `floor`;
/// reference = mean over layers of s_l; coeff_l = reference / s_l.
MomentumScales compute_scales(std::span<const DenseVector> momenta,
                              double floor = 1e-12);

/// Multiplies each layer segment by its scale coefficient.
void apply_scaling(FusedBuffer& fused, const MomentumScales& scales);
void apply_scaling(DenseVector& fused, const FusedLayout& layout,
                   const MomentumScales& scales);
/// Divides each layer segment by its scale coefficient.
void remove_scaling(FusedBuffer& fused, const MomentumScales& scales);
void remove_scaling(DenseVector& fused, const FusedLayout& layout,
                    const MomentumScales& scales);

}  // namespace bitlamb

#endif  // BITLAMB_FUSION_HPP_
