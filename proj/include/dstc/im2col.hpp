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
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dstc/bitmap.hpp"
#include "dstc/condense.hpp"
#include "dstc/dense.hpp"

namespace dstc {

// Valid (unpadded) convolution geometry. The row size of the feature map is its width.
struct ConvShape {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t filters = 1;

  // Throws ShapeError for empty dims, kernels larger than the map, or a row size whose
  // sliding windows do not tile it exactly.
  void validate() const;

  std::size_t out_h() const { return (height - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (width - kernel_w) / stride + 1; }
  std::size_t lowered_rows() const { return out_h() * out_w(); }
  std::size_t lowered_cols() const { return kernel_h * kernel_w * channels; }

  // Lowered-matrix column of kernel tap (kh, kw) on channel c.
  std::size_t column(std::size_t kh, std::size_t kw, std::size_t c) const {
    return (kh * kernel_w + kw) * channels + c;
  }
};

struct LoweredDims {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const LoweredDims&, const LoweredDims&) = default;
};

LoweredDims lowered_dims(const ConvShape& shape);

// Entries one feature-map row contributes to a lowered column per pass: (R - K + S) / S.
std::size_t values_per_column(const ConvShape& shape);

// Order in which the outer-product-friendly lowering emits lowered columns: for each
// kernel row and channel, the kernel columns in sequence (the 1xB window sweeping along
// one feature-map row).
std::vector<std::size_t> zigzag_column_order(const ConvShape& shape);

struct LoweredMatrix {
  DenseMatrix matrix;                       // (Ho*Wo) x (Kh*Kw*C)
  std::vector<std::size_t> emission_order;  // columns in the order they were produced
};

// Dense lowering generated one column at a time in zig-zag order.
LoweredMatrix dense_im2col_outer(const FeatureMap& map, const ConvShape& shape);

// Bookkeeping for one slice of a lowered lane taken from one bitmap row.
struct SegmentTrace {
  std::uint32_t channel = 0;
  std::uint32_t map_row = 0;
  std::uint32_t lane_begin = 0;  // first lane position filled by this slice
  std::uint32_t length = 0;      // lane positions filled
  std::uint32_t shift = 0;       // bits shifted out of the bitmap row before masking
  std::uint32_t offset = 0;      // accumulated shifted-out set bits
  std::uint32_t count = 0;       // popcount of the masked window
};

// One 32-row slice of a lowered column, already condensed.
struct LoweredLane {
  std::size_t tile_row = 0;
  std::size_t column = 0;
  std::size_t valid = 0;  // lowered rows covered (< 32 only in the last tile)
  CondensedLane lane;     // padded == count; callers quantize as needed
  std::vector<SegmentTrace> segments;
};

struct LoweringStats {
  std::size_t lanes = 0;
  std::size_t values = 0;
  std::size_t peak_buffered_values = 0;
  // Operation counts of the bitmap path.
  std::size_t bitmap_words_read = 0;
  std::size_t values_read = 0;
  std::size_t shifts = 0;
  std::size_t popcounts = 0;  // one per emitted value, to locate it in the row's value run
};

// Implicit sparse lowering straight from bitmap-encoded channels. Lanes are produced by
// masking, shifting and popcounting bitmap rows; no dense lowered matrix is built.
class SparseIm2col {
 public:
  SparseIm2col(std::span<const BitmapMatrix> channels, const ConvShape& shape);

  const ConvShape& shape() const { return shape_; }
  std::size_t tile_rows() const { return (shape_.lowered_rows() + kLaneWidth - 1) / kLaneWidth; }

  // The lane of `column` covering lowered rows [32 * tile_row, 32 * tile_row + 32).
  LoweredLane lane(std::size_t tile_row, std::size_t column, bool keep_segments = false) const;

  // All lanes of the lowered matrix in zig-zag order: per tile row, per kernel row and
  // channel, the kernel columns share one shifting bitmap register.
  void for_each_lane(const std::function<void(const LoweredLane&)>& emit, bool keep_segments = false,
                     LoweringStats* stats = nullptr) const;

 private:
  ConvShape shape_;
  std::span<const BitmapMatrix> channels_;
};

// Collects the full zig-zag stream.
std::vector<LoweredLane> sparse_im2col_bitmap(std::span<const BitmapMatrix> channels, const ConvShape& shape,
                                              bool keep_segments = true);

// Filters laid out (kh, kw, c) as FeatureMaps of Kh x Kw x C become the rows of an
// N x (Kh*Kw*C) bitmap matrix.
BitmapMatrix flatten_weights(std::span<const FeatureMap> filters);

}  // namespace dstc
