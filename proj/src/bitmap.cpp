// Copyright (c) 2026 The dstc Authors. All Rights Reserved.
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

#include "dstc/bitmap.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

BitmapMatrix::BitmapMatrix(BitGrid bitmap, std::vector<float> values,
                           std::vector<std::size_t> row_offsets)
    : bitmap_(std::move(bitmap)), values_(std::move(values)), row_offsets_(std::move(row_offsets)) {
  if (row_offsets_.size() != bitmap_.rows()) {
    throw CorruptEncodingError("row_offsets has " + std::to_string(row_offsets_.size()) +
                               " entries for " + std::to_string(bitmap_.rows()) + " rows");
  }
  std::size_t expected = 0;
  for (std::size_t r = 0; r < bitmap_.rows(); ++r) {
    if (row_offsets_[r] != expected) {
      throw CorruptEncodingError("row offset " + std::to_string(r) + " is " +
                                 std::to_string(row_offsets_[r]) + ", expected " +
                                 std::to_string(expected));
    }
    expected += bitmap_.row_popcount(r);
  }
  if (expected != values_.size()) {
    throw CorruptEncodingError("bitmap popcount " + std::to_string(expected) +
                               " != value count " + std::to_string(values_.size()));
  }
  for (float v : values_) {
    if (v == 0.0f) throw CorruptEncodingError("stored value is zero");
  }
}

std::span<const float> BitmapMatrix::row_values(std::size_t r) const {
  const std::size_t begin = row_offsets_[r];
  const std::size_t end = (r + 1 < row_offsets_.size()) ? row_offsets_[r + 1] : values_.size();
  return {values_.data() + begin, end - begin};
}

BitmapMatrix encode_single(const DenseMatrix& dense, const EncodeOptions& options) {
  if (dense.rows() == 0 || dense.cols() == 0) throw EmptyInputError("matrix has a zero dimension");
  BitGrid bits(dense.rows(), dense.cols());
  std::vector<float> values;
  std::vector<std::size_t> offsets(dense.rows());
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    offsets[r] = values.size();
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      float v = dense(r, c);
      if (options.round_fp16) v = round_to_fp16(v);
      if (v != 0.0f) {
        bits.set(r, c);
        values.push_back(v);
      }
    }
  }
  return BitmapMatrix(std::move(bits), std::move(values), std::move(offsets));
}

DenseMatrix decode_single(const BitmapMatrix& matrix) {
  DenseMatrix out(matrix.rows(), matrix.cols());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    auto vals = matrix.row_values(r);
    std::size_t i = 0;
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      if (matrix.bitmap().test(r, c)) out(r, c) = vals[i++];
    }
  }
  return out;
}

namespace {

std::uint16_t float_to_half_bits(float value) {
  const std::uint32_t f = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (f >> 16) & 0x8000u;
  const std::uint32_t abs = f & 0x7fffffffu;
  if (abs >= 0x7f800000u) {  // inf or nan
    return static_cast<std::uint16_t>(sign | 0x7c00u | (abs > 0x7f800000u ? 0x200u : 0u));
  }
  if (abs >= 0x477ff000u) return static_cast<std::uint16_t>(sign | 0x7c00u);  // overflow
  if (abs < 0x38800000u) {
    // subnormal half or zero
    if (abs < 0x33000000u) return static_cast<std::uint16_t>(sign);
    const std::uint32_t mant = (abs & 0x007fffffu) | 0x00800000u;
    const int shift = 126 - static_cast<int>(abs >> 23);
    std::uint32_t half = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1u);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
  }
  std::uint32_t half = ((abs - 0x38000000u) >> 13);
  const std::uint32_t rem = abs & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
  return static_cast<std::uint16_t>(sign | half);
}

float half_bits_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1fu;
  const std::uint32_t mant = h & 0x3ffu;
  if (exp == 0) {
    const float mag = std::ldexp(static_cast<float>(mant), -24);
    return sign ? -mag : mag;
  }
  if (exp == 31) return std::bit_cast<float>(sign | 0x7f800000u | (mant << 13));
  return std::bit_cast<float>(sign | ((exp + 112) << 23) | (mant << 13));
}

}  // namespace

float round_to_fp16(float value) { return half_bits_to_float(float_to_half_bits(value)); }

}  // namespace dstc
