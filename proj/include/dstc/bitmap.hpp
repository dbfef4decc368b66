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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dstc/bitgrid.hpp"
#include "dstc/dense.hpp"

namespace dstc {

// Single-level bitmap encoding: occupancy bits, packed nonzeros in row-major order and
// the index of each row's first value. This is the carrier for feature maps and
// flattened filters.
class BitmapMatrix {
 public:
  BitmapMatrix() = default;

  // Builds from raw parts and checks every structural invariant.
  BitmapMatrix(BitGrid bitmap, std::vector<float> values, std::vector<std::size_t> row_offsets);

  std::size_t rows() const { return bitmap_.rows(); }
  std::size_t cols() const { return bitmap_.cols(); }
  const BitGrid& bitmap() const { return bitmap_; }
  std::span<const float> values() const { return values_; }
  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::size_t nnz() const { return values_.size(); }

  // Values of row r, in column order.
  std::span<const float> row_values(std::size_t r) const;

  friend bool operator==(const BitmapMatrix&, const BitmapMatrix&) = default;

 private:
  BitGrid bitmap_;
  std::vector<float> values_;
  std::vector<std::size_t> row_offsets_;
};

struct EncodeOptions {
  // Round every value through IEEE half precision before storing it.
  bool round_fp16 = false;
};

BitmapMatrix encode_single(const DenseMatrix& dense, const EncodeOptions& options = {});
DenseMatrix decode_single(const BitmapMatrix& matrix);

// Round-to-nearest-even conversion through binary16 and back.
float round_to_fp16(float value);

}  // namespace dstc
