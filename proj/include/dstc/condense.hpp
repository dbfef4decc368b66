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

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "dstc/dense.hpp"
#include "dstc/two_level.hpp"

namespace dstc {

// Maximum lane length. Lane bitmaps are 32-bit words.
inline constexpr std::size_t kLaneWidth = 32;

// Left-operand lanes are columns pushed to the top; right-operand lanes are rows pushed
// to the left.
enum class Side : std::uint8_t { kA, kB };

// Allowed padded lane lengths, strictly ascending and ending at 32.
class QuantumLevels {
 public:
  QuantumLevels(std::initializer_list<std::size_t> levels);
  explicit QuantumLevels(std::vector<std::size_t> levels);

  // {8, 16, 24, 32}: a left lane can skip 0, 1, 2 or 3 quarters.
  static QuantumLevels a_side();
  // {16, 32}: a right lane can skip its upper half.
  static QuantumLevels b_side();
  static QuantumLevels for_side(Side side) { return side == Side::kA ? a_side() : b_side(); }

  // 0 for an empty lane, otherwise the smallest level >= count.
  std::size_t quantize(std::size_t count) const;
  std::span<const std::size_t> levels() const { return levels_; }

 private:
  std::vector<std::size_t> levels_;
};

// One condensed lane: the nonzeros in position order followed by zero padding.
struct CondensedLane {
  std::uint32_t bitmap = 0;  // bit i set <=> original position i held a stored value
  std::uint32_t count = 0;   // popcount(bitmap)
  std::uint32_t padded = 0;  // quantized length; values[count..padded) are zero
  std::array<float, kLaneWidth> values{};

  std::span<const float> padded_values() const { return {values.data(), padded}; }
  std::span<const float> nonzeros() const { return {values.data(), count}; }

  // Scatter back to a dense lane of `length` positions.
  std::array<float, kLaneWidth> expand() const;
};

// Condense a lane of up to 32 positions. Zero entries are dropped.
CondensedLane condense_lane(std::span<const float> lane, const QuantumLevels& levels);

// A lane taken verbatim for dense execution: the first `length` positions are all marked
// present (zeros included) and the length is rounded up to a whole multiple of `chunk`.
CondensedLane dense_lane(std::span<const float> lane, std::size_t chunk);

struct CondensedTile {
  Side side = Side::kA;
  std::vector<CondensedLane> lanes;  // one per column (A-side) or row (B-side)

  std::uint32_t lane_bitmap(std::size_t i) const { return lanes[i].bitmap; }
  std::uint32_t lane_count(std::size_t i) const { return lanes[i].count; }
};

// Condense a dense block of at most 32x32 along the side's lane direction.
CondensedTile condense(const DenseMatrix& block, Side side, const QuantumLevels& levels);

// Condense one tile of an encoded matrix without expanding it first when the value
// order already matches the side (column-major for A, row-major for B).
CondensedTile condense_tile(const TwoLevelBitmapMatrix& matrix, std::size_t grid_row, std::size_t grid_col,
                            Side side, const QuantumLevels& levels);

}  // namespace dstc
