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
#include <span>
#include <vector>

#include "dstc/bitgrid.hpp"
#include "dstc/bitmap.hpp"
#include "dstc/dense.hpp"

namespace dstc {

// Packing order of a tile's nonzeros. Left operands are consumed column by column in
// the outer product, right operands row by row.
enum class ValueOrder : std::uint8_t { kRowMajor, kColumnMajor };

struct BitmapTile {
  std::size_t grid_row = 0;
  std::size_t grid_col = 0;
  BitGrid bits;               // element bitmap, tile_rows x tile_cols
  std::vector<float> values;  // nonzeros in the matrix's value order

  friend bool operator==(const BitmapTile&, const BitmapTile&) = default;
};

// Tiled encoding: a warp bitmap with one bit per tile, plus an element bitmap and
// packed values for every tile whose warp bit is set. Dimensions that are not tile
// multiples are zero-padded internally; rows()/cols() report the logical size.
class TwoLevelBitmapMatrix {
 public:
  TwoLevelBitmapMatrix() = default;

  // Assembles from raw parts. Throws CorruptEncodingError if the warp bitmap, tile
  // list and per-tile popcounts disagree.
  TwoLevelBitmapMatrix(std::size_t rows, std::size_t cols, std::size_t tile_rows,
                       std::size_t tile_cols, ValueOrder order, BitGrid warp_bitmap,
                       std::vector<BitmapTile> tiles);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t tile_rows() const { return tile_rows_; }
  std::size_t tile_cols() const { return tile_cols_; }
  std::size_t grid_rows() const { return warp_bitmap_.rows(); }
  std::size_t grid_cols() const { return warp_bitmap_.cols(); }
  ValueOrder value_order() const { return order_; }

  const BitGrid& warp_bitmap() const { return warp_bitmap_; }
  bool warp_bit(std::size_t grid_row, std::size_t grid_col) const {
    return warp_bitmap_.test(grid_row, grid_col);
  }
  std::span<const BitmapTile> tiles() const { return tiles_; }

  // nullptr when the tile is empty.
  const BitmapTile* tile(std::size_t grid_row, std::size_t grid_col) const;

  std::size_t nnz() const;

  // Logical rows/cols covered by the tile, after clipping the zero padding.
  std::size_t valid_rows(std::size_t grid_row) const;
  std::size_t valid_cols(std::size_t grid_col) const;

  // Expand one tile to a dense tile_rows x tile_cols block (zeros for empty tiles).
  DenseMatrix tile_dense(std::size_t grid_row, std::size_t grid_col) const;

  friend bool operator==(const TwoLevelBitmapMatrix&, const TwoLevelBitmapMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t tile_rows_ = 0;
  std::size_t tile_cols_ = 0;
  ValueOrder order_ = ValueOrder::kRowMajor;
  BitGrid warp_bitmap_;
  std::vector<BitmapTile> tiles_;
  std::vector<std::int64_t> tile_index_;
};

struct TileShape {
  std::size_t rows = 32;
  std::size_t cols = 32;
};

TwoLevelBitmapMatrix encode(const DenseMatrix& dense, TileShape tile = {},
                            ValueOrder order = ValueOrder::kRowMajor,
                            const EncodeOptions& options = {});
DenseMatrix decode(const TwoLevelBitmapMatrix& encoded);

// Re-packs the same matrix with a different per-tile value order.
TwoLevelBitmapMatrix with_value_order(const TwoLevelBitmapMatrix& encoded, ValueOrder order);

}  // namespace dstc
