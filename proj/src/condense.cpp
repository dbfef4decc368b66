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

#include "dstc/condense.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

QuantumLevels::QuantumLevels(std::initializer_list<std::size_t> levels)
    : QuantumLevels(std::vector<std::size_t>(levels)) {}

QuantumLevels::QuantumLevels(std::vector<std::size_t> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw ConfigError("quantum levels are empty");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i] == 0) throw ConfigError("quantum level 0 is not a lane length");
    if (i > 0 && levels_[i] <= levels_[i - 1]) throw ConfigError("quantum levels must be strictly ascending");
  }
  if (levels_.back() != kLaneWidth) {
    throw ConfigError("last quantum level must be 32, got " + std::to_string(levels_.back()));
  }
}

QuantumLevels QuantumLevels::a_side() { return {8, 16, 24, 32}; }
QuantumLevels QuantumLevels::b_side() { return {16, 32}; }

std::size_t QuantumLevels::quantize(std::size_t count) const {
  if (count == 0) return 0;
  for (std::size_t level : levels_)
    if (level >= count) return level;
  throw ConfigError("lane count " + std::to_string(count) + " exceeds 32");
}

std::array<float, kLaneWidth> CondensedLane::expand() const {
  std::array<float, kLaneWidth> out{};
  std::uint32_t bits = bitmap;
  std::size_t i = 0;
  while (bits != 0) {
    const int pos = std::countr_zero(bits);
    out[static_cast<std::size_t>(pos)] = values[i++];
    bits &= bits - 1;
  }
  return out;
}

CondensedLane condense_lane(std::span<const float> lane, const QuantumLevels& levels) {
  if (lane.size() > kLaneWidth) throw ShapeError("lane longer than 32");
  CondensedLane out;
  for (std::size_t i = 0; i < lane.size(); ++i) {
    if (lane[i] != 0.0f) {
      out.bitmap |= (std::uint32_t{1} << i);
      out.values[out.count++] = lane[i];
    }
  }
  out.padded = static_cast<std::uint32_t>(levels.quantize(out.count));
  return out;
}

CondensedLane dense_lane(std::span<const float> lane, std::size_t chunk) {
  if (lane.size() > kLaneWidth) throw ShapeError("lane longer than 32");
  CondensedLane out;
  const std::size_t n = lane.size();
  out.bitmap = n == kLaneWidth ? ~std::uint32_t{0} : ((std::uint32_t{1} << n) - 1u);
  out.count = static_cast<std::uint32_t>(n);
  std::copy(lane.begin(), lane.end(), out.values.begin());
  out.padded = static_cast<std::uint32_t>(std::min(kLaneWidth, (n + chunk - 1) / chunk * chunk));
  return out;
}

CondensedTile condense(const DenseMatrix& block, Side side, const QuantumLevels& levels) {
  if (block.rows() > kLaneWidth || block.cols() > kLaneWidth) throw ShapeError("condense block exceeds 32x32");
  CondensedTile tile{side, {}};
  std::array<float, kLaneWidth> lane{};
  if (side == Side::kA) {
    for (std::size_t c = 0; c < block.cols(); ++c) {
      for (std::size_t r = 0; r < block.rows(); ++r) lane[r] = block(r, c);
      tile.lanes.push_back(condense_lane({lane.data(), block.rows()}, levels));
    }
  } else {
    for (std::size_t r = 0; r < block.rows(); ++r) tile.lanes.push_back(condense_lane(block.row(r), levels));
  }
  return tile;
}

CondensedTile condense_tile(const TwoLevelBitmapMatrix& matrix, std::size_t grid_row, std::size_t grid_col,
                            Side side, const QuantumLevels& levels) {
  if (matrix.tile_rows() > kLaneWidth || matrix.tile_cols() > kLaneWidth) {
    throw ShapeError("tiles larger than 32x32 cannot be condensed");
  }
  const ValueOrder native = side == Side::kA ? ValueOrder::kColumnMajor : ValueOrder::kRowMajor;
  if (matrix.value_order() != native) return condense(matrix.tile_dense(grid_row, grid_col), side, levels);

  const std::size_t lanes = side == Side::kA ? matrix.tile_cols() : matrix.tile_rows();
  const std::size_t positions = side == Side::kA ? matrix.tile_rows() : matrix.tile_cols();
  CondensedTile tile{side, std::vector<CondensedLane>(lanes)};
  const BitmapTile* t = matrix.tile(grid_row, grid_col);
  if (t == nullptr) return tile;

  // Values are packed lane after lane, so each lane is a contiguous run.
  std::size_t next = 0;
  for (std::size_t l = 0; l < lanes; ++l) {
    CondensedLane& lane = tile.lanes[l];
    for (std::size_t p = 0; p < positions; ++p) {
      const bool set = side == Side::kA ? t->bits.test(p, l) : t->bits.test(l, p);
      if (set) lane.bitmap |= (std::uint32_t{1} << p);
    }
    lane.count = static_cast<std::uint32_t>(std::popcount(lane.bitmap));
    std::copy_n(t->values.begin() + static_cast<std::ptrdiff_t>(next), lane.count, lane.values.begin());
    next += lane.count;
    lane.padded = static_cast<std::uint32_t>(levels.quantize(lane.count));
  }
  return tile;
}

}  // namespace dstc
