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

#ifndef BITLAMB_COMPRESSION_HPP_
#define BITLAMB_COMPRESSION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "bitlamb/dense_vector.hpp"

namespace bitlamb {

enum class CompressorKind {
  kOneBit,    // signs + one mean-absolute-value scale per block
  kIdentity,  // lossless pass-through, used as an exactness oracle
};

const char* to_string(CompressorKind kind);

/// 1-bit compressed vector: one sign bit per element (1 = nonnegative, zero
/// encodes as nonnegative) plus a single nonnegative scale. Element i
/// decompresses to signs_i ? +scale : -scale; scale == 0 decompresses to the
/// exact zero vector.
///
/// Wire layout (serialize/deserialize): sign bits packed little-endian within
/// bytes (element i lives in byte i/8, bit i%8), padded to a byte boundary,
/// followed by the scale as a little-endian 32-bit IEEE-754 value.
class CompressedBlock {
 public:
  CompressedBlock() = default;

  /// Compresses v: sign pattern of v plus scale = mean(|v_i|).
  static CompressedBlock compress(std::span<const double> v);

  std::size_t size() const { return size_; }
  double scale() const { return scale_; }
  bool sign_bit(std::size_t i) const {
    return (sign_bytes_[i >> 3] >> (i & 7)) & 1u;
  }

  DenseVector decompress() const;
  void decompress_into(std::span<double> out) const;
  /// out += decompressed
  void decompress_accumulate(std::span<double> out) const;

  /// Accounting convention: one bit per element plus 32 bits for the scale.
  std::uint64_t payload_bits() const { return size_ + 32; }

  std::vector<std::uint8_t> serialize() const;
  static CompressedBlock deserialize(std::span<const std::uint8_t> bytes,
                                     std::size_t element_count);

 private:
  std::vector<std::uint8_t> sign_bytes_;
  double scale_ = 0.0;
  std::size_t size_ = 0;
};

/// One compressed message: either a 1-bit block or a lossless dense payload.
class CompressedChunk {
 public:
  static CompressedChunk one_bit(CompressedBlock block);
  static CompressedChunk identity(DenseVector values);

  CompressorKind kind() const { return kind_; }
  std::size_t size() const;

  DenseVector decompress() const;
  void decompress_into(std::span<double> out) const;
  void decompress_accumulate(std::span<double> out) const;

  const CompressedBlock& block() const { return block_; }

 private:
  CompressorKind kind_ = CompressorKind::kOneBit;
  CompressedBlock block_;
  DenseVector dense_;
};

/// Residual buffer attached to a compressing endpoint. Starts at zero and is
/// updated only by compress_with_feedback.
struct ErrorFeedback {
  explicit ErrorFeedback(std::size_t d) : delta(d) {}
  DenseVector delta;
};

CompressedChunk compress(std::span<const double> v, CompressorKind kind);

/// Error-compensated compression: returns C[v + error_scale * delta] and
/// replaces fb.delta with (v + delta - decompress(result)). error_scale = 1
/// is the standard residual carry; other values are experimental.
CompressedChunk compress_with_feedback(const DenseVector& v, ErrorFeedback& fb,
                                       CompressorKind kind,
                                       double error_scale = 1.0);

/// Span-based variant writing the fresh residual in place; used by the
/// chunked collective. Requires v.size() == delta.size(). When
/// corrected_out is non-empty it must be the same length and receives the
/// stream that was actually compressed (v + error_scale * delta).
CompressedChunk compress_with_feedback(std::span<const double> v,
                                       std::span<double> delta,
                                       CompressorKind kind,
                                       double error_scale = 1.0,
                                       std::span<double> corrected_out = {});

}  // namespace bitlamb

#endif  // BITLAMB_COMPRESSION_HPP_
