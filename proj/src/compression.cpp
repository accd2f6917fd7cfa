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

#include "bitlamb/compression.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "bitlamb/errors.hpp"
#include "bitlamb/kernels.hpp"

namespace bitlamb {

const char* to_string(CompressorKind kind) {
  switch (kind) {
    case CompressorKind::kOneBit:
      return "onebit";
    case CompressorKind::kIdentity:
      return "identity";
  }
  return "unknown";
}

CompressedBlock CompressedBlock::compress(std::span<const double> v) {
  CompressedBlock block;
  block.size_ = v.size();
  block.sign_bytes_.assign((v.size() + 7) / 8, 0);
  const std::size_t nbytes = block.sign_bytes_.size();
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (nbytes >= 512)
#endif
  for (std::int64_t byte = 0; byte < static_cast<std::int64_t>(nbytes); ++byte) {
    const std::size_t lo = static_cast<std::size_t>(byte) * 8;
    const std::size_t hi = std::min(lo + 8, v.size());
    std::uint8_t bits = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (v[i] >= 0.0) bits |= static_cast<std::uint8_t>(1u << (i - lo));
    }
    block.sign_bytes_[static_cast<std::size_t>(byte)] = bits;
  }
  block.scale_ =
      v.empty() ? 0.0 : kernels::sum_abs(v) / static_cast<double>(v.size());
  if (!std::isfinite(block.scale_)) {
    throw std::invalid_argument("compress: input vector is not finite");
  }
  return block;
}

DenseVector CompressedBlock::decompress() const {
  DenseVector out(size_);
  decompress_into(out);
  return out;
}

void CompressedBlock::decompress_into(std::span<double> out) const {
  check_same_size(out.size(), size_, "decompress_into");
  if (scale_ == 0.0) {
    for (double& x : out) x = 0.0;
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (size_ >= 2048)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(size_); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    out[k] = sign_bit(k) ? scale_ : -scale_;
  }
}

void CompressedBlock::decompress_accumulate(std::span<double> out) const {
  check_same_size(out.size(), size_, "decompress_accumulate");
  if (scale_ == 0.0) return;
  for (std::size_t i = 0; i < size_; ++i) {
    out[i] += sign_bit(i) ? scale_ : -scale_;
  }
}

std::vector<std::uint8_t> CompressedBlock::serialize() const {
  std::vector<std::uint8_t> bytes(sign_bytes_);
  const std::uint32_t scale_bits =
      std::bit_cast<std::uint32_t>(static_cast<float>(scale_));
  for (int shift = 0; shift < 32; shift += 8) {
    bytes.push_back(static_cast<std::uint8_t>((scale_bits >> shift) & 0xffu));
  }
  return bytes;
}

CompressedBlock CompressedBlock::deserialize(
    std::span<const std::uint8_t> bytes, std::size_t element_count) {
  const std::size_t sign_bytes = (element_count + 7) / 8;
  if (bytes.size() != sign_bytes + 4) {
    throw DimensionError("deserialize: payload size does not match element count");
  }
  CompressedBlock block;
  block.size_ = element_count;
  block.sign_bytes_.assign(bytes.begin(), bytes.begin() + sign_bytes);
  std::uint32_t scale_bits = 0;
  for (int b = 0; b < 4; ++b) {
    scale_bits |= static_cast<std::uint32_t>(bytes[sign_bytes + b]) << (8 * b);
  }
  block.scale_ = static_cast<double>(std::bit_cast<float>(scale_bits));
  return block;
}

CompressedChunk CompressedChunk::one_bit(CompressedBlock block) {
  CompressedChunk chunk;
  chunk.kind_ = CompressorKind::kOneBit;
  chunk.block_ = std::move(block);
  return chunk;
}

CompressedChunk CompressedChunk::identity(DenseVector values) {
  CompressedChunk chunk;
  chunk.kind_ = CompressorKind::kIdentity;
  chunk.dense_ = std::move(values);
  return chunk;
}

std::size_t CompressedChunk::size() const {
  return kind_ == CompressorKind::kOneBit ? block_.size() : dense_.size();
}

DenseVector CompressedChunk::decompress() const {
  if (kind_ == CompressorKind::kOneBit) return block_.decompress();
  return dense_;
}

void CompressedChunk::decompress_into(std::span<double> out) const {
  if (kind_ == CompressorKind::kOneBit) {
    block_.decompress_into(out);
  } else {
    check_same_size(out.size(), dense_.size(), "decompress_into");
    kernels::copy(out, dense_);
  }
}

void CompressedChunk::decompress_accumulate(std::span<double> out) const {
  if (kind_ == CompressorKind::kOneBit) {
    block_.decompress_accumulate(out);
  } else {
    check_same_size(out.size(), dense_.size(), "decompress_accumulate");
    for (std::size_t i = 0; i < dense_.size(); ++i) out[i] += dense_[i];
  }
}

CompressedChunk compress(std::span<const double> v, CompressorKind kind) {
  if (kind == CompressorKind::kOneBit) {
    return CompressedChunk::one_bit(CompressedBlock::compress(v));
  }
  return CompressedChunk::identity(DenseVector(v));
}

CompressedChunk compress_with_feedback(std::span<const double> v,
                                       std::span<double> delta,
                                       CompressorKind kind, double error_scale,
                                       std::span<double> corrected_out) {
  check_same_size(v.size(), delta.size(), "compress_with_feedback");
  const std::size_t d = v.size();

  // corrected = v + error_scale * delta (the stream actually compressed)
  std::vector<double> scratch;
  std::span<double> corrected = corrected_out;
  if (corrected.empty() && d > 0) {
    scratch.resize(d);
    corrected = scratch;
  }
  check_same_size(corrected.size(), d, "compress_with_feedback: corrected_out");
  kernels::linear_combine(corrected, 1.0, v, error_scale, delta);
  CompressedChunk chunk = compress(corrected, kind);

  if (kind == CompressorKind::kIdentity) {
    // Lossless: the residual vanishes exactly.
    for (double& x : delta) x = 0.0;
    return chunk;
  }

  // delta <- v + delta - decompress(chunk)
  const CompressedBlock& block = chunk.block();
  const double s = block.scale();
  for (std::size_t i = 0; i < d; ++i) {
    const double reconstructed = block.sign_bit(i) ? s : -s;
    delta[i] = v[i] + delta[i] - reconstructed;
  }
  return chunk;
}

CompressedChunk compress_with_feedback(const DenseVector& v, ErrorFeedback& fb,
                                       CompressorKind kind,
                                       double error_scale) {
  return compress_with_feedback(v.span(), fb.delta.span(), kind, error_scale);
}

}  // namespace bitlamb
