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

#include "dstc/two_level.hpp"

#include <algorithm>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

namespace {

// Visit the set bits of a tile in the requested value order.
template <typename Fn>
void for_each_set_bit(const BitGrid& bits, ValueOrder order, Fn&& fn) {
  if (order == ValueOrder::kRowMajor) {
    for (std::size_t r = 0; r < bits.rows(); ++r)
      for (std::size_t c = 0; c < bits.cols(); ++c)
        if (bits.test(r, c)) fn(r, c);
  } else {
    for (std::size_t c = 0; c < bits.cols(); ++c)
      for (std::size_t r = 0; r < bits.rows(); ++r)
        if (bits.test(r, c)) fn(r, c);
  }
}

}  // namespace

TwoLevelBitmapMatrix::TwoLevelBitmapMatrix(std::size_t rows, std::size_t cols,
                                           std::size_t tile_rows, std::size_t tile_cols,
                                           ValueOrder order, BitGrid warp_bitmap,
                                           std::vector<BitmapTile> tiles)
    : rows_(rows),
      cols_(cols),
      tile_rows_(tile_rows),
      tile_cols_(tile_cols),
      order_(order),
      warp_bitmap_(std::move(warp_bitmap)),
      tiles_(std::move(tiles)) {
  if (tile_rows_ == 0 || tile_cols_ == 0) throw CorruptEncodingError("zero tile dimension");
  if (warp_bitmap_.rows() != (rows_ + tile_rows_ - 1) / tile_rows_ ||
      warp_bitmap_.cols() != (cols_ + tile_cols_ - 1) / tile_cols_) {
    throw CorruptEncodingError("warp bitmap grid does not match matrix and tile dims");
  }
  tile_index_.assign(warp_bitmap_.rows() * warp_bitmap_.cols(), -1);
  if (tiles_.size() != warp_bitmap_.popcount()) {
    throw CorruptEncodingError("warp bitmap has " + std::to_string(warp_bitmap_.popcount()) +
                               " set bits but " + std::to_string(tiles_.size()) + " tiles stored");
  }
  for (std::size_t i = 0; i < tiles_.size(); ++i) {
    const BitmapTile& t = tiles_[i];
    if (t.grid_row >= grid_rows() || t.grid_col >= grid_cols() || !warp_bit(t.grid_row, t.grid_col)) {
      throw CorruptEncodingError("tile " + std::to_string(i) + " is not marked in the warp bitmap");
    }
    std::int64_t& slot = tile_index_[t.grid_row * grid_cols() + t.grid_col];
    if (slot >= 0) throw CorruptEncodingError("duplicate tile");
    slot = static_cast<std::int64_t>(i);
    if (t.bits.rows() != tile_rows_ || t.bits.cols() != tile_cols_) {
      throw CorruptEncodingError("element bitmap has wrong dimensions");
    }
    const std::size_t pop = t.bits.popcount();
    if (pop != t.values.size()) {
      throw CorruptEncodingError("tile popcount " + std::to_string(pop) + " != value count " +
                                 std::to_string(t.values.size()));
    }
    if (pop == 0) throw CorruptEncodingError("stored tile is empty but its warp bit is set");
    for (std::size_t r = 0; r < tile_rows_; ++r) {
      for (std::size_t c = 0; c < tile_cols_; ++c) {
        if (t.bits.test(r, c) && (t.grid_row * tile_rows_ + r >= rows_ || t.grid_col * tile_cols_ + c >= cols_)) {
          throw CorruptEncodingError("element bit set in padding region");
        }
      }
    }
    for (float v : t.values)
      if (v == 0.0f) throw CorruptEncodingError("stored value is zero");
  }
}

const BitmapTile* TwoLevelBitmapMatrix::tile(std::size_t grid_row, std::size_t grid_col) const {
  const std::int64_t idx = tile_index_[grid_row * grid_cols() + grid_col];
  return idx < 0 ? nullptr : &tiles_[static_cast<std::size_t>(idx)];
}

std::size_t TwoLevelBitmapMatrix::nnz() const {
  std::size_t n = 0;
  for (const auto& t : tiles_) n += t.values.size();
  return n;
}

std::size_t TwoLevelBitmapMatrix::valid_rows(std::size_t grid_row) const {
  const std::size_t begin = grid_row * tile_rows_;
  return std::min(tile_rows_, rows_ - begin);
}

std::size_t TwoLevelBitmapMatrix::valid_cols(std::size_t grid_col) const {
  const std::size_t begin = grid_col * tile_cols_;
  return std::min(tile_cols_, cols_ - begin);
}

DenseMatrix TwoLevelBitmapMatrix::tile_dense(std::size_t grid_row, std::size_t grid_col) const {
  DenseMatrix block(tile_rows_, tile_cols_);
  const BitmapTile* t = tile(grid_row, grid_col);
  if (t == nullptr) return block;
  std::size_t i = 0;
  for_each_set_bit(t->bits, order_, [&](std::size_t r, std::size_t c) { block(r, c) = t->values[i++]; });
  return block;
}

TwoLevelBitmapMatrix encode(const DenseMatrix& dense, TileShape tile, ValueOrder order,
                            const EncodeOptions& options) {
  if (dense.rows() == 0 || dense.cols() == 0) throw EmptyInputError("matrix has a zero dimension");
  if (tile.rows == 0 || tile.cols == 0) throw ConfigError("tile dimensions must be >= 1");
  const std::size_t grid_rows = (dense.rows() + tile.rows - 1) / tile.rows;
  const std::size_t grid_cols = (dense.cols() + tile.cols - 1) / tile.cols;
  BitGrid warp(grid_rows, grid_cols);
  std::vector<BitmapTile> tiles;

  for (std::size_t gr = 0; gr < grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      BitmapTile t{gr, gc, BitGrid(tile.rows, tile.cols), {}};
      auto value_at = [&](std::size_t r, std::size_t c) -> float {
        const std::size_t gy = gr * tile.rows + r;
        const std::size_t gx = gc * tile.cols + c;
        if (gy >= dense.rows() || gx >= dense.cols()) return 0.0f;
        const float v = dense(gy, gx);
        return options.round_fp16 ? round_to_fp16(v) : v;
      };
      for (std::size_t r = 0; r < tile.rows; ++r)
        for (std::size_t c = 0; c < tile.cols; ++c)
          if (value_at(r, c) != 0.0f) t.bits.set(r, c);
      if (!t.bits.any()) continue;
      t.values.reserve(t.bits.popcount());
      for_each_set_bit(t.bits, order, [&](std::size_t r, std::size_t c) { t.values.push_back(value_at(r, c)); });
      warp.set(gr, gc);
      tiles.push_back(std::move(t));
    }
  }
  return TwoLevelBitmapMatrix(dense.rows(), dense.cols(), tile.rows, tile.cols, order, std::move(warp),
                              std::move(tiles));
}

DenseMatrix decode(const TwoLevelBitmapMatrix& encoded) {
  DenseMatrix out(encoded.rows(), encoded.cols());
  for (const BitmapTile& t : encoded.tiles()) {
    std::size_t i = 0;
    for_each_set_bit(t.bits, encoded.value_order(), [&](std::size_t r, std::size_t c) {
      out(t.grid_row * encoded.tile_rows() + r, t.grid_col * encoded.tile_cols() + c) = t.values[i++];
    });
  }
  return out;
}

TwoLevelBitmapMatrix with_value_order(const TwoLevelBitmapMatrix& encoded, ValueOrder order) {
  if (encoded.value_order() == order) return encoded;
  std::vector<BitmapTile> tiles;
  tiles.reserve(encoded.tiles().size());
  for (const BitmapTile& src : encoded.tiles()) {
    const DenseMatrix block = encoded.tile_dense(src.grid_row, src.grid_col);
    BitmapTile t{src.grid_row, src.grid_col, src.bits, {}};
    t.values.reserve(src.values.size());
    for_each_set_bit(t.bits, order, [&](std::size_t r, std::size_t c) { t.values.push_back(block(r, c)); });
    tiles.push_back(std::move(t));
  }
  return TwoLevelBitmapMatrix(encoded.rows(), encoded.cols(), encoded.tile_rows(), encoded.tile_cols(), order,
                              encoded.warp_bitmap(), std::move(tiles));
}

}  // namespace dstc
